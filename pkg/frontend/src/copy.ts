// UI wording lives here as an editable resource. The scale anchors below
// are placeholders in the official style; edit freely without touching
// the flow logic.

export const COPY = {
  appTitle: "Summary evaluation",
  loginPrompt: "Enter your annotator id to begin.",
  loginButton: "Start session",
  unknownAnnotator: "That annotator id is not on the roster.",
  page1Heading: "Step 1: read the candidate summary",
  page2Heading: "Step 2: compare against the reference",
  referenceHeading: "Reference conclusion",
  advanceButton: "Continue",
  submitButton: "Save and continue",
  retryHint: "Nothing was lost; your selections are kept locally. Try again.",
  doneHeading: "All reviews complete",
  doneBody: "Thank you. You can close this window.",
  progress: (done: number, total: number) => `${done} of ${total} reviews complete`,
  slotIndicator: (current: number, total: number) => `Summary ${current} of ${total}`,
  pageIndicator: (page: number) => `Page ${page} of 2`,

  questions: {
    relevance: {
      label: "How relevant is this summary to the review topic?",
      anchors: {
        1: "Mostly off-topic",
        2: "Partly on-topic",
        3: "Strongly focused on-topic",
      } as Record<number, string>,
    },
    plausibility: {
      label: "How plausible is the summary as a written conclusion?",
      anchors: {
        1: "Not at all plausible",
        2: "Slightly plausible",
        3: "Moderately plausible",
        4: "Plausible",
        5: "Completely plausible",
      } as Record<number, string>,
    },
    factual_agreement: {
      label: "To what degree does the summary agree with the reference?",
      anchors: {
        1: "Strong disagreement",
        2: "Some disagreement",
        3: "Neither agrees nor disagrees",
        4: "Some agreement",
        5: "Strong agreement",
      } as Record<number, string>,
    },
    reference_direction: {
      label: "What direction of effect does the reference report?",
      anchors: {
        benefit: "Evidence of benefit",
        harm: "Evidence of harm",
        no_difference: "No meaningful difference",
        cannot_tell: "Cannot tell",
      } as Record<string, string>,
    },
  },
};
