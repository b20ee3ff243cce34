//! hOCR reader: turns `ocrx_word` elements into [`WordBox`]es grouped by line.

use std::collections::{BTreeMap, HashMap};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::doc_model::{BBox, WordBox};

const LINE_CLASSES: [&str; 4] = ["ocr_line", "ocr_header", "ocr_caption", "ocr_textfloat"];

#[derive(Debug, Error, PartialEq)]
pub enum HocrError {
    #[error("malformed hOCR at byte {offset}: {message}")]
    Malformed { offset: u64, message: String },
    #[error("no bbox in title {0:?}")]
    NoBBox(String),
}

/// Counts of `ocrx_word` elements that were skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HocrDiagnostics {
    pub missing_bbox: usize,
    pub degenerate_bbox: usize,
    pub outside_page: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HocrPage {
    pub page_bbox: BBox,
    pub words: Vec<WordBox>,
    /// `title` attribute of every element carrying one, keyed by element id
    /// (or `class#serial` when the element has no id).
    pub raw_title_fields: BTreeMap<String, String>,
    pub diagnostics: HocrDiagnostics,
}

impl HocrPage {
    pub fn texts(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.text.as_str()).collect()
    }
}

/// Extracts `bbox x0 y0 x1 y1` from an hOCR `title` property list.
pub fn parse_bbox_title(title: &str) -> Result<(u32, u32, u32, u32), HocrError> {
    for prop in title.split(';') {
        let mut parts = prop.split_whitespace();
        if parts.next() != Some("bbox") {
            continue;
        }
        let nums: Vec<u32> = parts.take(4).map_while(|p| p.parse().ok()).collect();
        if let [x0, y0, x1, y1] = nums[..] {
            return Ok((x0, y0, x1, y1));
        }
    }
    Err(HocrError::NoBBox(title.to_string()))
}

fn parse_wconf(title: &str) -> Option<f64> {
    title.split(';').find_map(|prop| {
        let mut parts = prop.split_whitespace();
        (parts.next() == Some("x_wconf"))
            .then(|| parts.next()?.parse::<f64>().ok())
            .flatten()
            .map(|c| (c / 100.0).clamp(0.0, 1.0))
    })
}

struct Frame {
    serial: usize,
    classes: Vec<String>,
}

impl Frame {
    fn has_class(&self, wanted: &[&str]) -> bool {
        self.classes.iter().any(|c| wanted.contains(&c.as_str()))
    }
}

struct OpenWord {
    depth: usize,
    container: usize,
    title: Option<String>,
    text: String,
}

struct Builder {
    words: Vec<WordBox>,
    titles: BTreeMap<String, String>,
    diagnostics: HocrDiagnostics,
    page_bbox: Option<BBox>,
    line_of_container: HashMap<usize, usize>,
    words_in_line: Vec<usize>,
}

impl Builder {
    fn finish_word(&mut self, word: OpenWord) {
        let text = word.text.trim();
        if text.is_empty() {
            return;
        }
        let Some(title) = word.title else {
            self.diagnostics.missing_bbox += 1;
            return;
        };
        let Ok((x0, y0, x1, y1)) = parse_bbox_title(&title) else {
            self.diagnostics.missing_bbox += 1;
            return;
        };
        let Ok(bbox) = BBox::new(x0, y0, x1, y1) else {
            self.diagnostics.degenerate_bbox += 1;
            return;
        };
        if self.page_bbox.is_some_and(|p| !p.contains(&bbox)) {
            self.diagnostics.outside_page += 1;
            return;
        }
        let next_line = self.line_of_container.len();
        let line_index = *self.line_of_container.entry(word.container).or_insert(next_line);
        if line_index == self.words_in_line.len() {
            self.words_in_line.push(0);
        }
        let word_index = self.words_in_line[line_index];
        self.words_in_line[line_index] += 1;
        self.words.push(WordBox {
            text: text.to_string(),
            bbox,
            line_index,
            word_index,
            confidence: parse_wconf(&title),
        });
    }
}

fn malformed(offset: u64, message: impl Into<String>) -> HocrError {
    HocrError::Malformed { offset, message: message.into() }
}

fn unescape_text(raw: &str) -> String {
    quick_xml::escape::unescape_with(raw, |entity| match entity {
        "nbsp" => Some("\u{a0}"),
        other => quick_xml::escape::resolve_predefined_entity(other),
    })
    .map(|c| c.into_owned())
    .unwrap_or_else(|_| raw.to_string())
}

/// Class list, title and id of one element.
type Attrs = (Vec<String>, Option<String>, Option<String>);

/// Attribute lookup; returns `(class list, title, id)`.
fn element_attrs(e: &BytesStart<'_>, offset: u64) -> Result<Attrs, HocrError> {
    let mut classes = Vec::new();
    let mut title = None;
    let mut id = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| malformed(offset, err.to_string()))?;
        let value = attr
            .unescape_value()
            .map_err(|err| malformed(offset, err.to_string()))?
            .into_owned();
        match attr.key.as_ref() {
            b"class" => classes = value.split_whitespace().map(str::to_owned).collect(),
            b"title" => title = Some(value),
            b"id" => id = Some(value),
            _ => {}
        }
    }
    Ok((classes, title, id))
}

/// Parses an hOCR document into word boxes.
///
/// Words are grouped by their nearest line-level ancestor (`ocr_line`,
/// `ocr_header`, `ocr_caption`, `ocr_textfloat`), falling back to `ocr_par`
/// and then `ocr_page`. Line indices follow document order of the first word
/// in each group.
pub fn parse_hocr(document: &str) -> Result<HocrPage, HocrError> {
    let mut reader = Reader::from_str(document);
    reader.config_mut().trim_text(false);
    let mut stack: Vec<Frame> = Vec::new();
    let mut open_word: Option<OpenWord> = None;
    let mut serial = 0usize;
    let mut b = Builder {
        words: Vec::new(),
        titles: BTreeMap::new(),
        diagnostics: HocrDiagnostics::default(),
        page_bbox: None,
        line_of_container: HashMap::new(),
        words_in_line: Vec::new(),
    };

    loop {
        let offset = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|err| malformed(reader.error_position(), err.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                serial += 1;
                let (classes, title, id) = element_attrs(e, offset)?;
                if let Some(t) = &title {
                    let key = id.unwrap_or_else(|| {
                        format!("{}#{serial}", classes.first().map_or("element", String::as_str))
                    });
                    b.titles.insert(key, t.clone());
                }
                let frame = Frame { serial, classes };
                if frame.has_class(&["ocr_page"]) && b.page_bbox.is_none() {
                    b.page_bbox = title
                        .as_deref()
                        .and_then(|t| parse_bbox_title(t).ok())
                        .and_then(|(x0, y0, x1, y1)| BBox::new(x0, y0, x1, y1).ok());
                }
                if frame.has_class(&["ocrx_word"]) && open_word.is_none() {
                    let container = [&LINE_CLASSES[..], &["ocr_par"], &["ocr_page"]]
                        .iter()
                        .find_map(|wanted| stack.iter().rev().find(|f| f.has_class(wanted)))
                        .map_or(0, |f| f.serial);
                    let word = OpenWord { depth: stack.len(), container, title, text: String::new() };
                    if is_empty {
                        b.finish_word(word);
                    } else {
                        open_word = Some(word);
                    }
                }
                if !is_empty {
                    stack.push(frame);
                }
            }
            Event::End(_) => {
                stack.pop().ok_or_else(|| malformed(offset, "unbalanced end tag"))?;
                if open_word.as_ref().is_some_and(|w| w.depth == stack.len()) {
                    let word = open_word.take().expect("checked above");
                    b.finish_word(word);
                }
            }
            Event::Text(ref t) => {
                if let Some(word) = open_word.as_mut() {
                    let raw = std::str::from_utf8(t).map_err(|err| malformed(offset, err.to_string()))?;
                    word.text.push_str(&unescape_text(raw));
                }
            }
            Event::CData(ref t) => {
                if let Some(word) = open_word.as_mut() {
                    word.text.push_str(&String::from_utf8_lossy(t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(malformed(document.len() as u64, "unclosed element at end of input"));
    }

    let page_bbox = b.page_bbox.unwrap_or_else(|| {
        let mut bbox = BBox { x0: 0, y0: 0, x1: 1, y1: 1 };
        for w in &b.words {
            bbox = bbox.union(&BBox { x0: 0, y0: 0, ..w.bbox });
        }
        bbox
    });
    Ok(HocrPage { page_bbox, words: b.words, raw_title_fields: b.titles, diagnostics: b.diagnostics })
}

/// Minimal hOCR document for the given words (one `ocr_line` per line index).
pub fn render_hocr(page_bbox: &BBox, words: &[WordBox]) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<html xmlns=\"http://www.w3.org/1999/xhtml\">\n<body>\n",
    );
    out.push_str(&format!(
        "<div class='ocr_page' id='page_1' title='bbox {} {} {} {}'>\n",
        page_bbox.x0, page_bbox.y0, page_bbox.x1, page_bbox.y1
    ));
    let mut lines: BTreeMap<usize, Vec<&WordBox>> = BTreeMap::new();
    for w in words {
        lines.entry(w.line_index).or_default().push(w);
    }
    for (n, (line, mut ws)) in lines.into_iter().enumerate() {
        ws.sort_by_key(|w| w.word_index);
        let bbox = ws.iter().skip(1).fold(ws[0].bbox, |acc, w| acc.union(&w.bbox));
        out.push_str(&format!(
            "<span class='ocr_line' id='line_{}' title='bbox {} {} {} {}'>",
            n + 1,
            bbox.x0,
            bbox.y0,
            bbox.x1,
            bbox.y1
        ));
        for w in ws {
            let conf = w.confidence.map(|c| format!("; x_wconf {}", (c * 100.0).round())).unwrap_or_default();
            out.push_str(&format!(
                "<span class='ocrx_word' id='word_{}_{}' title='bbox {} {} {} {}{conf}'>{}</span> ",
                line, w.word_index, w.bbox.x0, w.bbox.y0, w.bbox.x1, w.bbox.y1,
                quick_xml::escape::escape(w.text.as_str())
            ));
        }
        out.push_str("</span>\n");
    }
    out.push_str("</div>\n</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wrap(body: &str) -> String {
        format!("<html><body><div class='ocr_page' title='bbox 0 0 2000 3000'>{body}</div></body></html>")
    }

    #[test]
    fn bbox_title_examples() {
        assert_eq!(parse_bbox_title("bbox 0 0 100 50").unwrap(), (0, 0, 100, 50));
        assert_eq!(parse_bbox_title("x_wconf 93; bbox 5 6 7 8").unwrap(), (5, 6, 7, 8));
        assert!(matches!(parse_bbox_title("x_wconf 93"), Err(HocrError::NoBBox(_))));
        assert!(parse_bbox_title("bbox 1 2 3").is_err());
    }

    #[test]
    fn single_word() {
        let doc = wrap(
            "<span class='ocr_line' title='bbox 393 441 619 495'>\
             <span class='ocrx_word' title='bbox 393 441 619 495; x_wconf 91'>Gaitskell</span></span>",
        );
        let page = parse_hocr(&doc).unwrap();
        assert_eq!(page.words.len(), 1);
        let w = &page.words[0];
        assert_eq!(w.text, "Gaitskell");
        assert_eq!(w.bbox, BBox::new(393, 441, 619, 495).unwrap());
        assert_eq!((w.line_index, w.word_index), (0, 0));
        assert_eq!(w.confidence, Some(0.91));
        assert_eq!(page.page_bbox, BBox::new(0, 0, 2000, 3000).unwrap());
    }

    #[test]
    fn empty_body() {
        let page = parse_hocr("<html><body></body></html>").unwrap();
        assert!(page.words.is_empty());
    }

    #[test]
    fn two_lines_two_words() {
        let doc = wrap(
            "<p class='ocr_par'>\
             <span class='ocr_line'><span class='ocrx_word' title='bbox 1 1 5 5'>a</span>\
             <span class='ocrx_word' title='bbox 6 1 9 5'>b</span></span>\
             <span class='ocr_line'><span class='ocrx_word' title='bbox 1 7 5 9'>c</span>\
             <span class='ocrx_word' title='bbox 6 7 9 9'><strong>d</strong></span></span></p>",
        );
        let page = parse_hocr(&doc).unwrap();
        let keys: Vec<_> = page.words.iter().map(|w| (w.line_index, w.word_index)).collect();
        assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(page.texts(), vec!["a", "b", "c", "d"]);
    }

    #[test]
    fn entities_decoded() {
        let doc = wrap(
            "<span class='ocr_line'><span class='ocrx_word' title='bbox 1 1 5 5'>604&#39;an</span>\
             <span class='ocrx_word' title='bbox 6 1 9 5'>R&amp;D</span></span>",
        );
        assert_eq!(parse_hocr(&doc).unwrap().texts(), vec!["604'an", "R&D"]);
    }

    #[test]
    fn skipped_words_are_counted() {
        let doc = wrap(
            "<span class='ocr_line'><span class='ocrx_word' title='x_wconf 3'>nobox</span>\
             <span class='ocrx_word' title='bbox 1 1 5 5'>   </span>\
             <span class='ocrx_word' title='bbox 5 5 5 9'>flat</span>\
             <span class='ocrx_word' title='bbox 1 1 4 4'>kept</span></span>",
        );
        let page = parse_hocr(&doc).unwrap();
        assert_eq!(page.texts(), vec!["kept"]);
        assert_eq!(page.diagnostics.missing_bbox, 1);
        assert_eq!(page.diagnostics.degenerate_bbox, 1);
    }

    #[test]
    fn malformed_reports_offset() {
        let err = parse_hocr("<html><body><span class='ocr_line'></div></body></html>").unwrap_err();
        assert!(matches!(err, HocrError::Malformed { offset, .. } if offset > 0), "{err:?}");
        assert!(matches!(parse_hocr("<html><body>"), Err(HocrError::Malformed { .. })));
    }

    #[test]
    fn doctype_and_meta_tolerated() {
        let doc = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
            <!DOCTYPE html PUBLIC \"-//W3C//DTD XHTML 1.0 Transitional//EN\" \"http://www.w3.org/TR/xhtml1/DTD/xhtml1-transitional.dtd\">\n\
            <html xmlns=\"http://www.w3.org/1999/xhtml\"><head><meta name='ocr-system' content='tesseract'/></head>\
            <body><div class='ocr_page' id='page_1' title='image \"x.png\"; bbox 0 0 100 100; ppageno 0'>\
            <span class='ocr_line' id='line_1_1' title='bbox 1 1 50 9'>\
            <span class='ocrx_word' id='word_1_1' title='bbox 1 1 20 9; x_wconf 96'>A</span> \
            <span class='ocrx_word' id='word_1_2' title='bbox 22 1 50 9; x_wconf 95'>move</span>\
            </span></div></body></html>";
        let page = parse_hocr(doc).unwrap();
        assert_eq!(page.texts(), vec!["A", "move"]);
        assert!(page.raw_title_fields.contains_key("word_1_2"));
    }

    fn arb_lines() -> impl Strategy<Value = Vec<Vec<String>>> {
        proptest::collection::vec(proptest::collection::vec("[A-Za-z&<'.]{1,6}", 1..5), 0..5)
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(lines in arb_lines()) {
            let mut words = Vec::new();
            for (l, line) in lines.iter().enumerate() {
                for (i, text) in line.iter().enumerate() {
                    let x0 = 10 + 60 * i as u32;
                    let y0 = 10 + 30 * l as u32;
                    words.push(WordBox {
                        text: text.clone(),
                        bbox: BBox::new(x0, y0, x0 + 50, y0 + 20).unwrap(),
                        line_index: l,
                        word_index: i,
                        confidence: Some(0.5),
                    });
                }
            }
            let page_bbox = BBox::new(0, 0, 1000, 1000).unwrap();
            let doc = render_hocr(&page_bbox, &words);
            let parsed = parse_hocr(&doc).unwrap();
            prop_assert_eq!(&parsed.words, &words);
            prop_assert_eq!(parse_hocr(&doc).unwrap(), parsed);
        }
    }
}
