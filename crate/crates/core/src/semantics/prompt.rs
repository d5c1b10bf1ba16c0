//! Request prompt for part-level interaction extraction.

/// Text immediately preceding the question sentence at the end of every prompt.
pub const QUESTION_MARKER: &str = "Provide your answer for the following sentence: ";

const OBJECTIVE: &str = "Identify all possible body parts involved in interacting with an object \
from the given sentence and extract the exact phrase that describes their action.";

const DEFINITION: &str = "An 'interaction' involves any purposeful physical engagement with an \
object, such as holding, touching, lifting, carrying, moving, manipulating, or using it in any way.";

const CHOICES: &str = "If no body parts are interacting with an object, respond with 'none'. \
Choose body parts from: left arm, right arm, left leg, right leg, torso, pelvis.";

const GRAMMAR: &str = "Answer with one line per body part in the form `body part: exact phrase`, \
copying the phrase word for word from the sentence, and nothing else.";

/// Question / answer pairs demonstrating the response grammar.
const EXAMPLES: [(&str, &str); 4] = [
    (
        "a person picks up a cup with the right hand and drinks from it",
        "right arm: picks up a cup with the right hand",
    ),
    (
        "someone walks forward and kicks a ball with their left foot",
        "left leg: kicks a ball with their left foot",
    ),
    (
        "a man lifts a heavy box with both hands and sits down on a chair",
        "left arm: lifts a heavy box with both hands\nright arm: lifts a heavy box with both hands\npelvis: sits down on a chair",
    ),
    ("a person jogs in a circle and then stops", "none"),
];

pub fn build_prompt(sentence: &str) -> String {
    let mut prompt = String::new();
    for part in [OBJECTIVE, DEFINITION, CHOICES, GRAMMAR] {
        prompt.push_str(part);
        prompt.push_str("\n\n");
    }
    prompt.push_str("Here are examples of how to format your responses:\n");
    for (question, answer) in EXAMPLES {
        prompt.push_str("\nSentence: ");
        prompt.push_str(question);
        prompt.push_str("\nAnswer:\n");
        prompt.push_str(answer);
        prompt.push('\n');
    }
    prompt.push('\n');
    prompt.push_str(QUESTION_MARKER);
    prompt.push_str(sentence.trim());
    prompt
}
