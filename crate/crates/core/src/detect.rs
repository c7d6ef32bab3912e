//! Verifiability classification by prompting: template rendering, few-shot
//! demonstration sampling and Yes/No answer parsing.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Claim, Label};
use crate::error::{Error, Result};
use crate::llm::{LlmProvider, LlmRequest};
use crate::summarize::{ContextMode, ContextSummary};

pub const CLASSIFY_MAX_TOKENS: u32 = 16;

const INSTRUCTION: &str = "### Instruction:\n\
Determine if the input text contains verifiable claims.\n\
The input text contains verifiable claims if it makes specific factual statements that can be checked against evidence.\n";

const CONTEXT_GUIDANCE: &str = "Additional information may help clarify what the claim refers to, but base your decision primarily on whether the claim makes specific factual statements.\n";

const DECISION: &str = "If the input text contains claims that can be verified, respond \"Yes\". Otherwise, respond \"No\".";

pub const DOUBT_DIRECTIVE: &str = " Note: When in doubt, choose \"Yes\".";

const ANSWER_FORMAT: &str = "In the end, respond only with 'Yes' for verifiable claims or 'No' for unverifiable claims.\n";

pub const ADDITIONAL_INFO_PREFIX: &str = "### Additional information: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub claim: Claim,
    pub label: Label,
    /// Only rendered when [`PromptConfig::demo_context`] is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    /// Include the context guidance sentence and the additional-information line.
    pub augmented: bool,
    /// Include the "When in doubt" sentence.
    pub doubt_directive: bool,
    pub shots: Vec<Demonstration>,
    /// Render demonstration contexts in augmented prompts.
    pub demo_context: bool,
    /// Label used when the response contains neither Yes nor No.
    pub default_label: Label,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            augmented: false,
            doubt_directive: true,
            shots: Vec::new(),
            demo_context: false,
            default_label: Label::Verifiable,
        }
    }
}

impl PromptConfig {
    pub fn baseline() -> Self {
        PromptConfig::default()
    }

    pub fn augmented() -> Self {
        PromptConfig {
            augmented: true,
            ..PromptConfig::default()
        }
    }

    pub fn with_shots(mut self, shots: Vec<Demonstration>) -> Self {
        self.shots = shots;
        self
    }

    pub fn without_doubt_directive(mut self) -> Self {
        self.doubt_directive = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Clean,
    Defaulted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub claim_id: String,
    pub label: Label,
    pub parse_status: ParseStatus,
    pub system_tag: String,
    pub raw_response: String,
}

/// Draws one verifiable and two non-verifiable demonstrations.
pub fn sample_few_shot(train: &[Claim], seed: u64) -> Result<Vec<Demonstration>> {
    let pool = |label: Label| -> Vec<&Claim> {
        train
            .iter()
            .filter(|c| c.gold_label == Some(label))
            .collect()
    };
    let verifiable = pool(Label::Verifiable);
    let non_verifiable = pool(Label::NonVerifiable);
    if verifiable.is_empty() || non_verifiable.len() < 2 {
        return Err(Error::InsufficientShots {
            needed_verifiable: 1,
            needed_non_verifiable: 2,
            verifiable: verifiable.len(),
            non_verifiable: non_verifiable.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demo = |c: &Claim, label| Demonstration {
        claim: c.clone(),
        label,
        context: None,
    };
    let mut shots = vec![demo(
        verifiable[rng.random_range(0..verifiable.len())],
        Label::Verifiable,
    )];
    for i in index::sample(&mut rng, non_verifiable.len(), 2) {
        shots.push(demo(non_verifiable[i], Label::NonVerifiable));
    }
    Ok(shots)
}

fn render_instruction(cfg: &PromptConfig) -> String {
    let mut out = String::from(INSTRUCTION);
    if cfg.augmented {
        out.push_str(CONTEXT_GUIDANCE);
    }
    out.push_str(DECISION);
    if cfg.doubt_directive {
        out.push_str(DOUBT_DIRECTIVE);
    }
    out.push('\n');
    out.push_str(ANSWER_FORMAT);
    out
}

/// Instantiates the detection template. Demonstrations precede the query,
/// each followed by a blank line.
pub fn render_detection_prompt(claim: &Claim, context: &ContextSummary, cfg: &PromptConfig) -> String {
    let mut out = render_instruction(cfg);
    for shot in &cfg.shots {
        out.push_str("### Input text: ");
        out.push_str(&shot.claim.text);
        out.push('\n');
        if let (true, true, Some(ctx)) = (cfg.augmented, cfg.demo_context, &shot.context) {
            out.push_str(ADDITIONAL_INFO_PREFIX);
            out.push_str(ctx);
            out.push('\n');
        }
        out.push_str("### Response: ");
        out.push_str(shot.label.answer());
        out.push_str("\n\n");
    }
    out.push_str("### Input text: ");
    out.push_str(&claim.text);
    out.push('\n');
    if cfg.augmented {
        out.push_str(ADDITIONAL_INFO_PREFIX);
        out.push_str(&context.text);
        out.push('\n');
    }
    out.push_str("### Response:");
    out
}

/// Takes the last standalone yes/no token, ignoring case, punctuation and
/// markdown. Falls back to `default_label`.
pub fn parse_verdict(raw: &str, default_label: Label) -> (Label, ParseStatus) {
    raw.rsplit(|c: char| !c.is_alphanumeric())
        .filter_map(|tok| {
            if tok.eq_ignore_ascii_case("yes") {
                Some(Label::Verifiable)
            } else if tok.eq_ignore_ascii_case("no") {
                Some(Label::NonVerifiable)
            } else {
                None
            }
        })
        .next()
        .map_or((default_label, ParseStatus::Defaulted), |l| (l, ParseStatus::Clean))
}

/// Tag like `cc-summary/http/gpt-4o/fs3/doubt`.
pub fn system_tag(mode: ContextMode, llm: &dyn LlmProvider, cfg: &PromptConfig) -> String {
    let system = match (cfg.augmented, mode) {
        (false, _) => "baseline".to_string(),
        (true, mode) => format!("cc-{mode}"),
    };
    let shots = if cfg.shots.is_empty() {
        "zs".to_string()
    } else {
        format!("fs{}", cfg.shots.len())
    };
    let doubt = if cfg.doubt_directive { "doubt" } else { "no-doubt" };
    format!("{system}/{}/{shots}/{doubt}", llm.id())
}

pub fn classify(
    claim: &Claim,
    context: &ContextSummary,
    mode: ContextMode,
    cfg: &PromptConfig,
    llm: &dyn LlmProvider,
) -> Result<Prediction> {
    let prompt = render_detection_prompt(claim, context, cfg);
    let req = LlmRequest::new(llm.model(), prompt, CLASSIFY_MAX_TOKENS);
    let raw = llm.complete(&req).map_err(|e| e.for_claim(&claim.id))?;
    let (label, parse_status) = parse_verdict(&raw, cfg.default_label);
    Ok(Prediction {
        claim_id: claim.id.clone(),
        label,
        parse_status,
        system_tag: system_tag(mode, llm, cfg),
        raw_response: raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Split};
    use crate::llm::FnLlm;
    use proptest::prelude::*;

    fn claim(id: &str, text: &str, label: Option<Label>) -> Claim {
        Claim::new(id, text, Dataset::CT22, Split::Train, label).unwrap()
    }

    fn corpus(n: usize) -> Vec<Claim> {
        (0..n)
            .map(|i| {
                let label = if i % 3 == 0 { Label::Verifiable } else { Label::NonVerifiable };
                claim(&format!("t{i}"), &format!("training claim {i}"), Some(label))
            })
            .collect()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_verdict("Yes", Label::NonVerifiable), (Label::Verifiable, ParseStatus::Clean));
        assert_eq!(
            parse_verdict("### Response: No", Label::Verifiable),
            (Label::NonVerifiable, ParseStatus::Clean)
        );
        assert_eq!(
            parse_verdict("I cannot determine this.", Label::Verifiable),
            (Label::Verifiable, ParseStatus::Defaulted)
        );
        assert_eq!(parse_verdict("**yes**.", Label::NonVerifiable).0, Label::Verifiable);
        assert_eq!(parse_verdict("No... actually, YES!", Label::NonVerifiable).0, Label::Verifiable);
        assert_eq!(parse_verdict("Nope, yesterday", Label::NonVerifiable).1, ParseStatus::Defaulted);
    }

    #[test]
    fn forced_triple() {
        let train = vec![
            claim("a", "one", Some(Label::NonVerifiable)),
            claim("b", "two", Some(Label::Verifiable)),
            claim("c", "three", Some(Label::NonVerifiable)),
        ];
        let shots = sample_few_shot(&train, 42).unwrap();
        assert_eq!(shots[0].claim.id, "b");
        let mut rest: Vec<_> = shots[1..].iter().map(|s| s.claim.id.as_str()).collect();
        rest.sort();
        assert_eq!(rest, ["a", "c"]);
    }

    #[test]
    fn sampling_is_seeded() {
        let train = corpus(100);
        let ids = |seed| -> Vec<String> {
            sample_few_shot(&train, seed)
                .unwrap()
                .into_iter()
                .map(|s| s.claim.id)
                .collect()
        };
        assert_eq!(ids(42), ids(42));
        assert_ne!(ids(42), ids(43));
        let labels: Vec<_> = sample_few_shot(&train, 7).unwrap().iter().map(|s| s.label).collect();
        assert_eq!(labels, [Label::Verifiable, Label::NonVerifiable, Label::NonVerifiable]);
    }

    #[test]
    fn insufficient_classes() {
        let train = vec![
            claim("a", "one", Some(Label::Verifiable)),
            claim("b", "two", Some(Label::NonVerifiable)),
        ];
        assert!(matches!(sample_few_shot(&train, 1), Err(Error::InsufficientShots { .. })));
    }

    #[test]
    fn ablated_prompt_has_no_doubt_sentence() {
        let c = claim("q", "Alaska made history this year", None);
        let ctx = ContextSummary::none("q");
        let p = render_detection_prompt(&c, &ctx, &PromptConfig::augmented().without_doubt_directive());
        assert!(!p.contains("When in doubt"));
        assert_eq!(p.matches("### Additional information:").count(), 1);
        assert!(p.ends_with("### Response:"));
    }

    #[test]
    fn one_call_per_classification() {
        let spy = FnLlm::new("spy", |_| "Yes".into());
        let c = claim("q", "Lindsey Graham got a vaccine", None);
        let pred = classify(&c, &ContextSummary::none("q"), ContextMode::None, &PromptConfig::baseline(), &spy)
            .unwrap();
        assert_eq!(spy.calls(), 1);
        assert_eq!(pred.label, Label::Verifiable);
        assert_eq!(pred.system_tag, "baseline/fn/spy/zs/doubt");
    }

    proptest! {
        #[test]
        fn augmented_differs_only_by_highlighted_blocks(text in "[A-Za-z0-9 ,.']{1,80}", ctx in "[A-Za-z0-9 ,.]{0,80}", doubt in any::<bool>(), fs in any::<bool>()) {
            prop_assume!(!text.trim().is_empty());
            let c = claim("q", &text, None);
            let summary = ContextSummary { text: ctx.clone(), ..ContextSummary::none("q") };
            let mut base = PromptConfig::baseline();
            base.doubt_directive = doubt;
            if fs {
                base.shots = sample_few_shot(&corpus(9), 42).unwrap();
            }
            let aug = PromptConfig { augmented: true, ..base.clone() };
            let b = render_detection_prompt(&c, &summary, &base);
            let a = render_detection_prompt(&c, &summary, &aug);
            let info_line = format!("{ADDITIONAL_INFO_PREFIX}{ctx}\n");
            let stripped = a.replacen(CONTEXT_GUIDANCE, "", 1);
            let pos = stripped.rfind(&info_line).unwrap();
            let stripped = format!("{}{}", &stripped[..pos], &stripped[pos + info_line.len()..]);
            prop_assert_eq!(stripped, b);
        }

        #[test]
        fn parse_is_total(s in ".*") {
            let (label, status) = parse_verdict(&s, Label::NonVerifiable);
            if status == ParseStatus::Defaulted {
                prop_assert_eq!(label, Label::NonVerifiable);
            }
        }
    }
}
