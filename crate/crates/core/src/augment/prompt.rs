//! Prompt templates for query rewriting and keyword generation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Synonym,
    Antonym,
    Keywords,
}

/// A rendered prompt. `system` and `user` are what a chat endpoint sees;
/// `query` and `document` describe the source pair for providers that
/// work on structure instead of text (the mock).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
    pub query: String,
    pub document: String,
}

impl Prompt {
    /// System and user messages as one text block.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role_instruction: String,
    pub constraints: String,
    pub few_shot_examples: Vec<(String, String)>,
    pub output_format_instruction: String,
}

impl PromptTemplate {
    /// Returns `(system, user)`. The target appears once, after the
    /// examples.
    pub fn render(&self, target_label: &str, target: &str) -> (String, String) {
        let mut user = String::new();
        user.push_str(&self.constraints);
        user.push_str("\n\nExamples:\n");
        for (input, output) in &self.few_shot_examples {
            user.push_str(&format!("{target_label}: {input}\nOutput:\n{output}\n\n"));
        }
        user.push_str(&self.output_format_instruction);
        user.push_str(&format!("\n\n{target_label}: {target}\nOutput:\n"));
        (self.role_instruction.clone(), user)
    }

    pub fn synonym() -> Self {
        PromptTemplate {
            role_instruction: "You are a synonym generator for search queries on a local \
                               lifestyle review platform."
                .into(),
            constraints: "Write alternative queries that mean exactly the same thing as the \
                          given query but are worded differently. Keep the search intent, \
                          location and entity unchanged. Prefer variants that a relevance \
                          model could confuse with a different intent, but which a careful \
                          reader would judge equivalent. Never repeat the original query."
                .into(),
            few_shot_examples: vec![
                ("cheap noodles downtown".into(), "affordable noodles downtown\ninexpensive noodle shop downtown".into()),
                ("kid friendly cafe".into(), "family cafe for children\ncafe suitable for kids".into()),
            ],
            output_format_instruction: "Return up to 3 rewritten queries, one per line, with no \
                                        numbering and no extra text."
                .into(),
        }
    }

    pub fn antonym() -> Self {
        PromptTemplate {
            role_instruction: "You are an antonym generator for search queries on a local \
                               lifestyle review platform."
                .into(),
            constraints: "Write queries whose meaning is the opposite of, or incompatible with, \
                          the given query while reusing as many of its words as possible. A \
                          document that satisfies the original query must not satisfy the \
                          rewritten one."
                .into(),
            few_shot_examples: vec![
                ("quiet bar".into(), "noisy bar".into()),
                ("outdoor barbecue".into(), "indoor barbecue".into()),
            ],
            output_format_instruction: "Return 1 rewritten query per line, with no numbering and \
                                        no extra text."
                .into(),
        }
    }

    pub fn keywords() -> Self {
        PromptTemplate {
            role_instruction: "You are a keyword extractor for user reviews on a local lifestyle \
                               platform."
                .into(),
            constraints: "Extract exactly 3 keywords or short phrases that appear verbatim in \
                          the document, ordered from most to least important to the document \
                          as a whole."
                .into(),
            few_shot_examples: vec![(
                "Tried the lamb skewers at the night market. The cumin crust was perfect and \
                 the skewers were cheap."
                    .into(),
                "lamb skewers>night market>cumin".into(),
            )],
            output_format_instruction: "Return a single line in the form \
                                        keyword1>keyword2>keyword3 with no extra text."
                .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Templates {
    pub synonym: PromptTemplate,
    pub antonym: PromptTemplate,
    pub keywords: PromptTemplate,
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            synonym: PromptTemplate::synonym(),
            antonym: PromptTemplate::antonym(),
            keywords: PromptTemplate::keywords(),
        }
    }
}

impl Templates {
    pub fn prompt(&self, kind: PromptKind, query: &str, document: &str) -> Prompt {
        let (system, user) = match kind {
            PromptKind::Synonym => self.synonym.render("Query", query),
            PromptKind::Antonym => self.antonym.render("Query", query),
            PromptKind::Keywords => self.keywords.render("Document", document),
        };
        Prompt {
            kind,
            system,
            user,
            query: query.to_string(),
            document: document.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendered_prompt_has_all_parts_and_target_once() {
        let t = Templates::default();
        for (kind, tpl) in [
            (PromptKind::Synonym, &t.synonym),
            (PromptKind::Antonym, &t.antonym),
            (PromptKind::Keywords, &t.keywords),
        ] {
            let target = "zq-unique-target-7781";
            let p = t.prompt(kind, target, target);
            let text = p.text();
            assert!(text.contains(&tpl.role_instruction));
            assert!(text.contains(&tpl.constraints));
            assert!(text.contains(&tpl.output_format_instruction));
            for (i, o) in &tpl.few_shot_examples {
                assert!(text.contains(i.as_str()) && text.contains(o.as_str()));
            }
            assert_eq!(text.matches(target).count(), 1, "{kind:?}");
        }
    }
}
