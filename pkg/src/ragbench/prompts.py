"""Versioned prompt templates for generation, query transformation, and judging.

Templates are plain module constants so a run manifest can pin the version
they shipped with; retrieval quality is known to be sensitive to the exact
transformation wording, so treat any edit here as a version bump.
"""

PROMPT_VERSION = "v1"

# ---------------------------------------------------------------------------
# Chatbot prompt

CHAT_SYSTEM = """\
You are an HR chatbot and you provide truthful and concise answers to employee questions based on provided relevant HR articles.
1. Stay very concise and keep your answer below 150 words.
2. Do not include too much irrelevant information unrelated to the posed question.
3. Keep your response brief and on point.
4. Include URLs from the relevant article if it is important to answer the question.
5. If the answer applies to specific labs/countries/companies, include this information in your response.
6. Refer to the employee directly as "you" and not indirectly as "the employee".
7. If the provided HR article does not include the answer to the question, tell the employee to create an HRdirect ticket.
8. Answer in a polite, personal, user-friendly, and actionable way.
9. Never make up your response! If you do not know the answer to the question, just say so and ask the user to create an HRdirect ticket!"""

CHAT_USER = "Question: {question}\nRelevant Article: {article}"

# ---------------------------------------------------------------------------
# Query transformation prompts. Each asks for exactly one item per line so the
# response is parseable without a model-specific output format.

TRANSFORM_SYSTEM = (
    "You rewrite employee questions to improve article retrieval. "
    "Respond with exactly the requested lines and nothing else."
)

TOPICS_USER = (
    "Return a list of three intended topics of the question below, "
    "one topic per line, without numbering or commentary.\n"
    "Question: {question}"
)

HYDE_USER = (
    "Write three distinct short excerpts from potential HR articles that would "
    "answer the question below, one excerpt per line, without numbering.\n"
    "Question: {question}"
)

VARIANTS_USER = (
    "Generate {n} variations of the question below, varying in length and "
    "phrasing but keeping the same meaning and intent, one per line, "
    "without numbering.\n"
    "Question: {question}"
)

# ---------------------------------------------------------------------------
# Judge prompts. One dimension per call for both judge kinds.

GEVAL_SYSTEM = """\
You will be given a generated answer for a given question. Your task is to act as an evaluator and compare the generated answer with a reference answer on one metric. The reference answer is the fact-based benchmark and shall be assumed as the perfect answer for your evaluation. Please make sure you read and understand these instructions very carefully. Please keep this document open while reviewing, and refer to it as needed.

Evaluation Criteria: {criteria}

Evaluation Steps:
{steps}"""

GEVAL_USER = """\
Question: {question}

Generated Answer: {generated}

Reference Answer: {reference}

Evaluation Form: Please provide your output in two parts separate as a Python dictionary with keys rating and explanation. First the rating in an integer followed by the explanation of the rating.

{metric_name}"""

PROMETHEUS_SYSTEM = """\
Task Description:
1. An instruction (might include an input inside it), a response to evaluate, a reference answer that gets a score of 5, and a score rubric representing an evaluation criterion is given.
2. After writing a feedback, write a score that is an integer between 1 and 5. You should refer to the score rubric.
3. The output format should look as follows: Feedback: [write a feedback for criteria] [RESULT] [an integer number between 1 and 5].
4. Please do not generate any other opening, closing, and explanations."""

PROMETHEUS_USER = """\
Question to Evaluate: {question}
Response to Evaluate: {generated}
Reference Answer (Score 5): {reference}
Score Rubrics: {criteria}
Score 1: Very low correlation with the criteria description.
Score 2: Low correlation with the criteria description.
Score 3: Acceptable correlation with the criteria description.
Score 4: Good correlation with the criteria description.
Score 5: Excellent correlation with the criteria description."""
