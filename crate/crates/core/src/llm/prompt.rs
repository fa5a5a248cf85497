use serde::{Deserialize, Serialize};

use super::parse::OUTPUT_FIELD;
use super::LlmError;
use crate::ingest::VerdictDocument;
use crate::markers::MarkerSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub excerpt: String,
    pub fact_sentence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub instruction_text: String,
    pub start_hints: Vec<String>,
    pub end_hints: Vec<String>,
    pub exemplars: Vec<Exemplar>,
    pub output_field: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    /// Characters contributed by the template, i.e. everything but the document.
    pub template_chars: usize,
    pub document_chars: usize,
}

const INSTRUCTION: &str = "\
You are an assistant that reads criminal court decisions and copies out one specific passage: the factual statement.

DEFINITION
A criminal verdict opens with a dispositive part. The dispositive part identifies the case, the court and the offender; announces whether the offender is found guilty; describes the criminal behavior for which the offender is found guilty; subsumes that behavior under the legal definition of an offense; and pronounces the sentence and any compensation of damages. Some verdicts then continue with reasoning, which explains the decision and the course of the proceedings.

The factual statement is the third element of the dispositive part. It is the authoritative description of what the offender did: when, where, how and with what consequence. It normally starts with a date or a period of time, names a place, and describes concrete acts such as taking, damaging, threatening, driving, selling or possessing something. It often states the amount of damage caused or the quantity of a substance. It is written as one long sentence, sometimes split into numbered points when the offender committed several acts, and it ends immediately before the legal qualification of the behavior.

WHERE IT BEGINS AND ENDS
The factual statement begins right after the words that announce guilt. The list of START MARKERS below contains the typical phrases; the statement starts with the first word that follows the phrase. It ends right before the words that introduce the legal qualification. The list of END MARKERS below contains the typical phrases; the statement ends with the last character before the phrase, which is usually a comma. Do not include the marker phrases themselves in your answer.

Text converted from PDF may contain broken lines, extra spaces inside words, or letters separated by spaces in headings such as \"R o z s u d o k\". Headings written with spaced letters open a new section of the decision. If no end marker follows the start of the factual statement, the statement ends before the next such heading.

RULES
1. Copy the factual statement verbatim. Keep the original spelling, diacritics, punctuation, numbers, abbreviations and capitalization. Do not correct typing errors. Do not translate.
2. Return only the factual component. Omit legal evaluations: do not include the name of the offense, the provisions of the criminal code, the words that introduce the legal qualification, the sentence, the costs of the proceedings, or any part of the reasoning.
3. Do not summarize, shorten or paraphrase. Do not add words that are not in the decision. Do not join passages that are separated in the decision by other text.
4. If the behavior is described in several numbered points, return all points together as one passage, from the first word of the first point to the last character of the last point.
5. If the decision concerns several offenders, return the passage describing the behavior of the first offender found guilty.
6. Line breaks and repeated spaces inside the passage may be replaced with single spaces. Nothing else may be changed.
7. If the offender is acquitted, if the decision only concerns procedure (for example a decision on costs, on custody or on the return of a case), or if the decision contains no description of criminal behavior, report that there is no factual statement. Do not guess and do not copy a different passage instead.
8. Never return the reasoning part of the decision, even if it retells the events in more detail.
9. Never return text from the examples below. They only illustrate the task; the decision you must process comes at the end of this message.

TYPICAL MISTAKES TO AVOID
- Stopping at the first comma. The factual statement is usually long and contains many commas; it ends only before the legal qualification.
- Starting too early. The identification of the offender (name, date of birth, residence) is not part of the factual statement.
- Ending too late. Phrases such as \"therefore he committed\" or \"thus they committed\" introduce the legal qualification and must not be included.
- Returning the description of behavior from the reasoning part, which often paraphrases the dispositive part with small differences.
- Rewriting dates or amounts into a different format.
- Dropping the closing comma. When the statement ends with a comma before the end marker, keep that comma.
- Treating a conditional suspension, a probation order or a decision on damages as the end marker. Such passages follow the legal qualification and are never part of the statement.";

const OUTPUT_FORMAT: &str = "\
Return a single JSON object and nothing else. Do not wrap it in prose. The object has exactly one field:
{\"FIELD\": \"<the factual statement copied verbatim>\"}
If the decision contains no factual statement, return:
{\"FIELD\": null}";

fn default_exemplars() -> Vec<Exemplar> {
    let pairs: [(&str, Option<&str>); 6] = [
        (
            "Obžalovaný Róbert Fekete\nis acknowledged guilty that\nin the period from 1 October 2020 to 28 February 2021 in Malé Kosihy, as the statutory representative of the company Agro Plus s.r.o., did not pay to the health insurance company and to the social insurance agency the contributions withheld from the wages of eleven employees for the months October 2020 to February 2021 in the total amount of 18 412,56 EUR, although the wages were paid out to the employees and the company had sufficient funds on its bank account during the whole period, and he used the withheld contributions to pay for the operation of the company,\ntherefore he committed the offense of failure to pay contributions,\nS a  p o d m i e n e č n e  o d k l a d á",
            Some("in the period from 1 October 2020 to 28 February 2021 in Malé Kosihy, as the statutory representative of the company Agro Plus s.r.o., did not pay to the health insurance company and to the social insurance agency the contributions withheld from the wages of eleven employees for the months October 2020 to February 2021 in the total amount of 18 412,56 EUR, although the wages were paid out to the employees and the company had sufficient funds on its bank account during the whole period, and he used the withheld contributions to pay for the operation of the company,"),
        ),
        (
            "R o z s u d o k\nv mene republiky\nOkresný súd Dolná Lehota v trestnej veci obžalovaného Marek Kováč, nar. 3. 4. 1988, bytom Horná 12, Lúčka\nt a k t o\nrozhodol:\nObžalovaný Marek Kováč\nis found guilty that\non 12 March 2020 at about 22:15 in Lúčka, on Horná street, broke the lock of a garden shed belonging to the injured party Ján Varga with a crowbar, entered the shed and took from it an electric chainsaw, a lawn mower and a set of hand tools in the total value of 1 240 EUR, thereby causing damage to the injured party in the same amount,\ntherefore he committed the offense of theft under section 212 of the criminal code,\na o d s u d z u j e sa\nna trest odňatia slobody v trvaní 18 mesiacov.",
            Some("on 12 March 2020 at about 22:15 in Lúčka, on Horná street, broke the lock of a garden shed belonging to the injured party Ján Varga with a crowbar, entered the shed and took from it an electric chainsaw, a lawn mower and a set of hand tools in the total value of 1 240 EUR, thereby causing damage to the injured party in the same amount,"),
        ),
        (
            "Obžalovaná Zuzana Hrušková\nis acknowledged as guilty that\n1. on 2 May 2019 in Nové Pole, in the store Potraviny Sever, took from a shelf three bottles of spirits worth 41,70 EUR and left the store without paying,\n2. on 9 May 2019 in the same store took two packages of coffee worth 12,40 EUR and left without paying, although she had been convicted of theft within the previous twelve months,\nthus she committed the offense of theft under section 212 paragraph 2 letter f) of the criminal code,\na o d s u d z u j e sa\nna peňažný trest vo výške 300 EUR.",
            Some("1. on 2 May 2019 in Nové Pole, in the store Potraviny Sever, took from a shelf three bottles of spirits worth 41,70 EUR and left the store without paying,\n2. on 9 May 2019 in the same store took two packages of coffee worth 12,40 EUR and left without paying, although she had been convicted of theft within the previous twelve months,"),
        ),
        (
            "Obžalovaný Peter Šimko je v i n n ý, že\nis found guilty\non 30 November 2021 at about 01:40 drove a passenger car Škoda Octavia on the road from Veľká Ves towards Malá Ves after consuming alcoholic beverages, when a breath test performed by a police patrol showed 1,12 mg/l of alcohol in exhaled air, which corresponds to 2,34 g/kg of alcohol in blood,\ntherefore he committed the offense of endangering under the influence of an addictive substance,\nO d ô v o d n e n i e\nOkresná prokuratúra podala obžalobu ...",
            Some("on 30 November 2021 at about 01:40 drove a passenger car Škoda Octavia on the road from Veľká Ves towards Malá Ves after consuming alcoholic beverages, when a breath test performed by a police patrol showed 1,12 mg/l of alcohol in exhaled air, which corresponds to 2,34 g/kg of alcohol in blood,"),
        ),
        (
            "Obžalovaní Tomáš Belan a Igor Dudáš\nthey are guilty that\nin the period from January 2018 to 14 June 2018 in Stredné Mesto, acting together, offered and sold to at least four persons a crystalline substance containing methamphetamine in the total amount of at least 9 grams for 40 EUR per gram, and kept a further 3,2 grams of the substance in their shared flat for the purpose of sale,\nthus they committed the offense of illicit production and possession of narcotic substances,\na o d s u d z u j ú sa",
            Some("in the period from January 2018 to 14 June 2018 in Stredné Mesto, acting together, offered and sold to at least four persons a crystalline substance containing methamphetamine in the total amount of at least 9 grams for 40 EUR per gram, and kept a further 3,2 grams of the substance in their shared flat for the purpose of sale,"),
        ),
        (
            "U z n e s e n i e\nKrajský súd v Hornom Meste v trestnej veci obvineného Ladislav Novák rozhodol o sťažnosti proti uzneseniu o väzbe tak, že sťažnosť sa zamieta, pretože nie je dôvodná.\nO d ô v o d n e n i e\nOkresný súd vzal obvineného do väzby ...",
            None,
        ),
    ];
    pairs
        .into_iter()
        .map(|(e, f)| Exemplar {
            excerpt: e.to_string(),
            fact_sentence: f.map(str::to_string),
        })
        .collect()
}

impl PromptSpec {
    /// The shipped template with hints taken from `markers`.
    pub fn default_for(markers: &MarkerSet) -> Self {
        Self {
            instruction_text: INSTRUCTION.to_string(),
            start_hints: markers.start_markers().to_vec(),
            end_hints: markers.end_markers().to_vec(),
            exemplars: default_exemplars(),
            output_field: OUTPUT_FIELD.to_string(),
        }
    }

    fn render(&self, document: &str) -> String {
        let mut out = String::with_capacity(self.instruction_text.len() + document.len() + 4096);
        out.push_str(&self.instruction_text);
        out.push_str("\n\nSTART MARKERS\n");
        for h in &self.start_hints {
            out.push_str(&format!("- \"{h}\"\n"));
        }
        out.push_str("\nEND MARKERS\n");
        for h in &self.end_hints {
            out.push_str(&format!("- \"{h}\"\n"));
        }
        out.push_str("\nEXAMPLES\n");
        for (i, ex) in self.exemplars.iter().enumerate() {
            let answer = serde_json::json!({ self.output_field.as_str(): ex.fact_sentence });
            out.push_str(&format!(
                "\nExample {}\nDecision:\n<<<\n{}\n>>>\nAnswer:\n{}\n",
                i + 1,
                ex.excerpt,
                answer
            ));
        }
        out.push_str("\nOUTPUT FORMAT\n");
        out.push_str(&OUTPUT_FORMAT.replace("FIELD", &self.output_field));
        out.push_str("\n\nDECISION TO PROCESS\n<<<\n");
        out.push_str(document);
        out.push_str("\n>>>\n");
        out
    }
}

/// Cut the middle out of an over-long document, keeping head and tail.
/// Returns the text and whether anything was removed.
pub fn fit_document(text: &str, max_chars: usize) -> (String, bool) {
    const GAP: &str = "\n[...]\n";
    let n = text.chars().count();
    if n <= max_chars {
        return (text.to_string(), false);
    }
    let keep = max_chars.saturating_sub(GAP.chars().count());
    let head = keep - keep / 2;
    let tail = keep / 2;
    let mut out: String = text.chars().take(head).collect();
    out.push_str(GAP);
    out.extend(text.chars().skip(n - tail));
    (out, true)
}

/// Deterministic rendering: instruction, marker hints, exemplars, output
/// format, then the document text.
pub fn build_prompt(doc: &VerdictDocument, spec: &PromptSpec) -> Result<RenderedPrompt, LlmError> {
    build_prompt_for_text(&doc.raw_text, spec)
}

pub fn build_prompt_for_text(document: &str, spec: &PromptSpec) -> Result<RenderedPrompt, LlmError> {
    if spec.exemplars.is_empty() {
        return Err(LlmError::Argument("prompt needs at least one exemplar".into()));
    }
    if spec.start_hints.is_empty() || spec.end_hints.is_empty() {
        return Err(LlmError::Argument("prompt needs start and end marker hints".into()));
    }
    let text = spec.render(document);
    let document_chars = document.chars().count();
    Ok(RenderedPrompt {
        template_chars: text.chars().count() - document_chars,
        document_chars,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> VerdictDocument {
        VerdictDocument::new("d", "c", "1T/1/2020", Some(2020), text).unwrap()
    }

    #[test]
    fn deterministic() {
        let spec = PromptSpec::default_for(&MarkerSet::default_set());
        let d = doc("Obžalovaný is found guilty that he stole, therefore");
        assert_eq!(build_prompt(&d, &spec).unwrap(), build_prompt(&d, &spec).unwrap());
    }

    #[test]
    fn default_template_is_about_ten_thousand_chars() {
        let spec = PromptSpec::default_for(&MarkerSet::default_set());
        let p = build_prompt_for_text("", &spec).unwrap();
        assert_eq!(p.document_chars, 0);
        assert_eq!(p.template_chars, p.text.chars().count());
        let target = 10_497f64;
        assert!(
            (p.template_chars as f64 - target).abs() / target <= 0.02,
            "template has {} chars",
            p.template_chars
        );
    }

    #[test]
    fn order_and_document_at_end() {
        let spec = PromptSpec::default_for(&MarkerSet::default_set());
        let p = build_prompt(&doc("UNIQUE-DOC-BODY"), &spec).unwrap();
        let pos = |s: &str| p.text.find(s).unwrap();
        assert!(pos("DEFINITION") < pos("START MARKERS"));
        assert!(pos("END MARKERS") < pos("EXAMPLES"));
        assert!(pos("EXAMPLES") < pos("OUTPUT FORMAT"));
        assert!(pos("OUTPUT FORMAT") < pos("UNIQUE-DOC-BODY"));
        assert!(p.text.contains("Omit legal evaluations"));
        assert_eq!(p.document_chars, 15);
    }

    #[test]
    fn large_marker_lists_fully_rendered() {
        let start: Vec<String> = (0..40).map(|i| format!("opener number {i} that")).collect();
        let end = ["therefore", "thus"];
        let set = MarkerSet::new(&start, &end.map(String::from)).unwrap();
        let p = build_prompt(&doc("x"), &PromptSpec::default_for(&set)).unwrap();
        for m in set.start_markers().iter().chain(set.end_markers()) {
            assert!(p.text.contains(&format!("- \"{m}\"\n")), "missing {m}");
        }
    }

    #[test]
    fn rejects_empty_exemplars() {
        let mut spec = PromptSpec::default_for(&MarkerSet::default_set());
        spec.exemplars.clear();
        assert!(build_prompt(&doc("x"), &spec).is_err());
    }

    #[test]
    fn middle_truncation_keeps_head_and_tail() {
        let text: String = (0..100).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let (short, cut) = fit_document(&text, 30);
        assert!(cut);
        assert_eq!(short.chars().count(), 30);
        assert!(short.starts_with(&text[..12]));
        assert!(short.ends_with(&text[89..]));
        assert_eq!(fit_document("abc", 30), ("abc".to_string(), false));
    }
}
