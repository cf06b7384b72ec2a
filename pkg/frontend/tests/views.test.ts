import { describe, expect, it } from "vitest";

import { COPY } from "../src/copy";
import { TaskViewModel } from "../src/state";
import { escapeHtml, render, renderTask } from "../src/views";

function workingVm(overrides: Partial<TaskViewModel> = {}): TaskViewModel {
  return {
    phase: "working",
    error: null,
    busy: false,
    topicTitle: "Steroids for croup",
    summary: "Treatment significantly improved symptoms.",
    page: 1,
    slotNumber: 2,
    slotCount: 3,
    questions: [
      {
        question: "relevance",
        label: "relevance",
        options: [1, 2, 3].map((v) => ({ value: v, label: String(v), selected: v === 2 })),
      },
    ],
    canSubmit: false,
    progress: { completed_reviews: 1, total_reviews: 3 },
    ...overrides,
  };
}

describe("escapeHtml", () => {
  it("neutralises markup in server text", () => {
    expect(escapeHtml(`<img src=x onerror="a&b">'`)).toBe(
      "&lt;img src=x onerror=&quot;a&amp;b&quot;&gt;&#39;",
    );
  });
});

describe("render dispatch", () => {
  it("shows the login form with the roster prompt", () => {
    const html = render({ phase: "login", error: null, busy: false });
    expect(html).toContain(`data-action="login"`);
    expect(html).toContain(COPY.loginPrompt);
  });

  it("shows the completion screen with final progress", () => {
    const html = render({
      phase: "done",
      error: null,
      busy: false,
      progress: { completed_reviews: 3, total_reviews: 3 },
    });
    expect(html).toContain(COPY.doneHeading);
    expect(html).toContain("3 of 3 reviews complete");
  });
});

describe("task page", () => {
  it("renders title, summary, slot and page indicators, and progress", () => {
    const html = renderTask(workingVm());
    expect(html).toContain("Steroids for croup");
    expect(html).toContain("Treatment significantly improved symptoms.");
    expect(html).toContain("Summary 2 of 3");
    expect(html).toContain("Page 1 of 2");
    expect(html).toContain("1 of 3 reviews complete");
  });

  it("keeps the reference summary off page 1", () => {
    const html = renderTask(workingVm());
    expect(html).not.toContain(COPY.referenceHeading);
    expect(html).not.toContain("Reference conclusion for");
  });

  it("shows the reference block on page 2", () => {
    const html = renderTask(
      workingVm({ page: 2, referenceSummary: "The reference says no difference." }),
    );
    expect(html).toContain(COPY.referenceHeading);
    expect(html).toContain("The reference says no difference.");
    expect(html).toContain("Page 2 of 2");
  });

  it("marks the chosen option and disables the button until the page is complete", () => {
    let html = renderTask(workingVm());
    expect(html).toContain(`value="2" checked`);
    expect(html).toMatch(/<button type="submit" disabled>/);
    html = renderTask(workingVm({ canSubmit: true }));
    expect(html).not.toMatch(/<button type="submit" disabled>/);
  });

  it("labels scale points with the copy anchors", () => {
    const html = renderTask(workingVm());
    expect(html).toContain(COPY.questions.relevance.label);
    expect(html).toContain("Mostly off-topic");
    expect(html).toContain("Strongly focused on-topic");
  });

  it("renders the inline error with the retry hint when present", () => {
    const html = renderTask(workingVm({ error: "plausibility must be one of 1, 2, 3, 4, 5" }));
    expect(html).toContain("plausibility must be one of");
    expect(html).toContain(COPY.retryHint);
  });

  it("escapes hostile text coming from the server", () => {
    const html = renderTask(
      workingVm({ topicTitle: `<script>alert(1)</script>`, summary: `<b>bold</b>` }),
    );
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
    expect(html).not.toContain("<b>bold</b>");
  });
});
