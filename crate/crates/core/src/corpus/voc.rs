//! Pascal VOC XML.
//!
//! Coordinates are written as integers: minima are floored and maxima are
//! ceiled, so the written box always contains the in-memory box.

use serde::{Deserialize, Serialize};

use super::{Detection, Element, LayoutClass, PageAnnotation};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

const IMAGE_FOLDER: &str = "images";

#[derive(Serialize)]
#[serde(rename = "annotation")]
struct VocOut<'a> {
    folder: &'a str,
    filename: String,
    size: VocSize,
    #[serde(rename = "object")]
    objects: Vec<VocObjectOut>,
}

#[derive(Serialize, Deserialize)]
struct VocSize {
    width: u32,
    height: u32,
    depth: u32,
}

#[derive(Serialize)]
struct VocObjectOut {
    name: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
    bndbox: BndBoxOut,
}

#[derive(Serialize)]
struct BndBoxOut {
    xmin: i64,
    ymin: i64,
    xmax: i64,
    ymax: i64,
}

#[derive(Deserialize)]
struct VocIn {
    #[serde(default)]
    filename: String,
    size: VocSizeIn,
    #[serde(rename = "object", default)]
    objects: Vec<VocObjectIn>,
}

#[derive(Deserialize)]
struct VocSizeIn {
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct VocObjectIn {
    name: String,
    #[serde(default)]
    confidence: Option<f64>,
    bndbox: BndBoxIn,
}

#[derive(Deserialize)]
struct BndBoxIn {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
}

fn integerize(b: &BoundingBox) -> BndBoxOut {
    BndBoxOut {
        xmin: b.x_min.floor() as i64,
        ymin: b.y_min.floor() as i64,
        xmax: b.x_max.ceil() as i64,
        ymax: b.y_max.ceil() as i64,
    }
}

fn render(page_id: &str, width: u32, height: u32, objects: Vec<VocObjectOut>) -> Result<Vec<u8>> {
    let doc = VocOut {
        folder: IMAGE_FOLDER,
        filename: format!("{page_id}.png"),
        size: VocSize {
            width,
            height,
            depth: 1,
        },
        objects,
    };
    let mut body = String::new();
    let mut ser = quick_xml::se::Serializer::new(&mut body);
    ser.indent(' ', 2);
    doc.serialize(ser)
        .map_err(|e| Error::MalformedVoc(e.to_string()))?;
    body.push('\n');
    Ok(body.into_bytes())
}

pub fn write_voc(a: &PageAnnotation) -> Result<Vec<u8>> {
    a.validate()?;
    let objects = a
        .elements
        .iter()
        .map(|e| VocObjectOut {
            name: e.label.name(),
            confidence: None,
            bndbox: integerize(&e.bbox),
        })
        .collect();
    render(&a.page_id, a.width, a.height, objects)
}

/// Detection dump: VOC objects carrying an extra `confidence` child.
pub fn write_voc_detections(
    page_id: &str,
    width: u32,
    height: u32,
    detections: &[Detection],
) -> Result<Vec<u8>> {
    let objects = detections
        .iter()
        .map(|d| VocObjectOut {
            name: d.label.name(),
            confidence: Some(d.confidence),
            bndbox: integerize(&d.bbox),
        })
        .collect();
    render(page_id, width, height, objects)
}

struct Parsed {
    page_id: String,
    width: u32,
    height: u32,
    objects: Vec<(BoundingBox, LayoutClass, Option<f64>)>,
}

fn parse(bytes: &[u8]) -> Result<Parsed> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedVoc(e.to_string()))?;
    let doc: VocIn =
        quick_xml::de::from_str(text).map_err(|e| Error::MalformedVoc(e.to_string()))?;
    let page_id = std::path::Path::new(&doc.filename)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default()
        .to_string();
    let (width, height) = (doc.size.width, doc.size.height);
    let mut objects = Vec::with_capacity(doc.objects.len());
    for (index, o) in doc.objects.into_iter().enumerate() {
        let label: LayoutClass = o.name.trim().parse()?;
        let bb = &o.bndbox;
        let bbox = BoundingBox::new(bb.xmin, bb.ymin, bb.xmax, bb.ymax)
            .map_err(|e| Error::MalformedVoc(format!("object {index}: {e}")))?;
        if !bbox.within_page(width as f64, height as f64) {
            return Err(Error::BoxOutsidePage {
                index,
                width,
                height,
            });
        }
        if let Some(c) = o.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::MalformedVoc(format!(
                    "object {index}: confidence {c} outside [0, 1]"
                )));
            }
        }
        objects.push((bbox, label, o.confidence));
    }
    Ok(Parsed {
        page_id,
        width,
        height,
        objects,
    })
}

pub fn read_voc(bytes: &[u8]) -> Result<PageAnnotation> {
    let p = parse(bytes)?;
    Ok(PageAnnotation {
        page_id: p.page_id,
        width: p.width,
        height: p.height,
        elements: p
            .objects
            .into_iter()
            .map(|(bbox, label, _)| Element { bbox, label })
            .collect(),
    })
}

/// Reads a detection dump; objects without `confidence` default to 1.
pub fn read_voc_detections(bytes: &[u8]) -> Result<(PageAnnotation, Vec<Detection>)> {
    let p = parse(bytes)?;
    let dets = p
        .objects
        .iter()
        .map(|&(bbox, label, c)| Detection {
            bbox,
            label,
            confidence: c.unwrap_or(1.0),
        })
        .collect();
    let ann = PageAnnotation {
        page_id: p.page_id,
        width: p.width,
        height: p.height,
        elements: p
            .objects
            .into_iter()
            .map(|(bbox, label, _)| Element { bbox, label })
            .collect(),
    };
    Ok((ann, dets))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(label: LayoutClass, c: [f64; 4]) -> Element {
        Element {
            bbox: BoundingBox::from_array(c).unwrap(),
            label,
        }
    }

    #[test]
    fn serializes_paragraph_object() {
        let mut a = PageAnnotation::new("page_0007", 100, 100);
        a.elements
            .push(el(LayoutClass::Paragraph, [6., 6., 24., 24.]));
        let xml = String::from_utf8(write_voc(&a).unwrap()).unwrap();
        assert!(xml.contains("<name>Paragraph</name>"));
        assert!(xml.contains("<xmin>6</xmin>"));
        assert!(xml.contains("<ymin>6</ymin>"));
        assert!(xml.contains("<xmax>24</xmax>"));
        assert!(xml.contains("<ymax>24</ymax>"));
        assert!(xml.contains("<filename>page_0007.png</filename>"));
        assert_eq!(read_voc(xml.as_bytes()).unwrap(), a);
    }

    #[test]
    fn empty_annotation_has_no_objects() {
        let a = PageAnnotation::new("blank", 40, 30);
        let xml = String::from_utf8(write_voc(&a).unwrap()).unwrap();
        assert!(!xml.contains("<object>"));
        assert!(xml.contains("<width>40</width>"));
        assert_eq!(read_voc(xml.as_bytes()).unwrap(), a);
    }

    #[test]
    fn integerizes_outward() {
        let mut a = PageAnnotation::new("p", 100, 100);
        a.elements.push(el(LayoutClass::H2, [1.2, 3.9, 10.1, 20.5]));
        let back = read_voc(&write_voc(&a).unwrap()).unwrap();
        assert_eq!(back.elements[0].bbox.to_array(), [1., 3., 11., 21.]);
        assert_eq!(read_voc(&write_voc(&back).unwrap()).unwrap(), back);
    }

    #[test]
    fn rejects_unknown_class() {
        let xml = r#"<annotation><folder>images</folder><filename>x.png</filename>
            <size><width>50</width><height>50</height><depth>1</depth></size>
            <object><name>Footnote</name><bndbox><xmin>1</xmin><ymin>1</ymin><xmax>5</xmax><ymax>5</ymax></bndbox></object>
            </annotation>"#;
        assert!(matches!(
            read_voc(xml.as_bytes()),
            Err(Error::UnknownClass(_))
        ));
    }

    #[test]
    fn rejects_box_outside_page() {
        let xml = r#"<annotation><folder>images</folder><filename>x.png</filename>
            <size><width>50</width><height>50</height><depth>1</depth></size>
            <object><name>H1</name><bndbox><xmin>1</xmin><ymin>1</ymin><xmax>55</xmax><ymax>5</ymax></bndbox></object>
            </annotation>"#;
        assert!(matches!(
            read_voc(xml.as_bytes()),
            Err(Error::BoxOutsidePage { index: 0, .. })
        ));
    }

    #[test]
    fn rejects_malformed_xml() {
        assert!(matches!(
            read_voc(b"<annotation><size>"),
            Err(Error::MalformedVoc(_))
        ));
        assert!(matches!(read_voc(b"not xml"), Err(Error::MalformedVoc(_))));
    }

    #[test]
    fn detection_dump_carries_confidence() {
        let d = Detection {
            bbox: BoundingBox::new(2., 2., 8., 9.).unwrap(),
            label: LayoutClass::H3,
            confidence: 0.75,
        };
        let xml = write_voc_detections("p", 20, 20, &[d]).unwrap();
        assert!(String::from_utf8_lossy(&xml).contains("<confidence>0.75</confidence>"));
        let (ann, dets) = read_voc_detections(&xml).unwrap();
        assert_eq!(ann.page_id, "p");
        assert_eq!(dets, vec![d]);
    }
}
