use serde::Deserialize;

use super::DialogueError;

pub const BUILTIN_SCRIPT: &str = include_str!("../../data/script.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AdaptStep {
    pub grammar: String,
    pub phrase: String,
    pub prompt: String,
    pub reprompt: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SessionStep {
    pub seconds: f64,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct QuizStep {
    pub grammar: String,
    pub phrase: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct QuestionStep {
    pub grammar: String,
    pub prompt: String,
    pub answers: Vec<String>,
    pub correct: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CommandStep {
    pub grammar: String,
    pub prompt: String,
    pub options: Vec<String>,
}

/// Prompt wording and grammar ids of the interaction, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Script {
    pub listen_timeout: f64,
    pub max_adapt_failures: u32,
    pub intro: String,
    pub exercise_intro: String,
    pub farewell: String,
    pub abort: String,
    pub adapt: Vec<AdaptStep>,
    pub sessions: Vec<SessionStep>,
    pub quiz: QuizStep,
    pub questions: Vec<QuestionStep>,
    pub commands: Vec<CommandStep>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, DialogueError> {
        let script: Script = toml::from_str(text).map_err(|e| DialogueError::Script(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SCRIPT).expect("built-in script is valid")
    }

    fn validate(&self) -> Result<(), DialogueError> {
        let bad = |m: &str| Err(DialogueError::Script(m.to_string()));
        if self.adapt.len() != 3 || self.sessions.len() != 4 || self.questions.len() != 4 || self.commands.len() != 2 {
            return bad("expected 3 adapt steps, 4 sessions, 4 questions and 2 command rounds");
        }
        if !(self.listen_timeout > 0.0) || self.max_adapt_failures == 0 {
            return bad("timeout and failure limit must be positive");
        }
        if self.sessions.iter().any(|s| !(s.seconds > 0.0)) {
            return bad("session durations must be positive");
        }
        if self.questions.iter().any(|q| !q.answers.contains(&q.correct)) {
            return bad("every question's correct answer must be one of its answers");
        }
        let texts = [&self.intro, &self.exercise_intro, &self.farewell, &self.abort, &self.quiz.prompt];
        if texts.iter().any(|t| t.trim().is_empty()) {
            return bad("prompts must be nonempty");
        }
        Ok(())
    }

    /// Every phrase the child is expected to say, in script order.
    pub fn expected_phrases(&self) -> Vec<String> {
        let mut out: Vec<String> = self.adapt.iter().map(|a| a.phrase.clone()).collect();
        out.push(self.quiz.phrase.clone());
        for q in &self.questions {
            out.extend(q.answers.iter().cloned());
        }
        for c in &self.commands {
            out.extend(c.options.iter().cloned());
        }
        let mut seen = std::collections::BTreeSet::new();
        out.retain(|p| seen.insert(p.clone()));
        out
    }

    /// Phrases of the multiple-choice stages (questions and commands).
    pub fn multiple_choice_phrases(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in self
            .questions
            .iter()
            .flat_map(|q| q.answers.iter())
            .chain(self.commands.iter().flat_map(|c| c.options.iter()))
        {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
        out
    }
}
