// DOM controller: wires the API client, the pure queue state and the
// keyboard loop together. All authoritative state lives on the server;
// this file only renders the latest acknowledged view.

import { ApiClient, ApiError, NetworkError, PreviewResponse, WarningCard } from "./api.js";
import { isTextTarget, keyAction } from "./keys.js";
import {
  AppState,
  cardKey,
  currentCard,
  draftFor,
  initialState,
  nextCard,
  prevCard,
  withDraft,
  withFilters,
  withOffline,
  withoutCard,
  withoutDraft,
  withQueue,
} from "./state.js";

function esc(text: string | null | undefined): string {
  return (text ?? "")
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export class App {
  state: AppState = initialState();
  status = "";
  preview: PreviewResponse | null = null;
  previewError = "";
  rejudging = false;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  annotator(): string {
    return window.localStorage.getItem("lingeval.annotator") ?? "";
  }

  async start(): Promise<void> {
    document.addEventListener("keydown", (event) => this.onKey(event));
    await this.refresh();
  }

  async refresh(): Promise<void> {
    try {
      const queue = await this.api.warnings(this.state.filters);
      this.state = withOffline(withQueue(this.state, queue.warnings, queue.progress), false);
    } catch (err) {
      if (err instanceof NetworkError) {
        this.state = withOffline(this.state, true);
      } else {
        this.status = err instanceof Error ? err.message : String(err);
      }
    }
    this.render();
  }

  async onKey(event: KeyboardEvent): Promise<void> {
    const target = event.target as HTMLElement | null;
    const action = keyAction(event.key, isTextTarget(target?.tagName));
    if (!action) return;
    event.preventDefault();
    switch (action) {
      case "next":
        this.state = nextCard(this.state);
        this.resetPreview();
        this.render();
        break;
      case "prev":
        this.state = prevCard(this.state);
        this.resetPreview();
        this.render();
        break;
      case "pass":
        await this.submitVerdict("pass");
        break;
      case "fail":
        await this.submitVerdict("fail");
        break;
      case "edit-rule":
        (this.root.querySelector("#rule-pattern") as HTMLInputElement | null)?.focus();
        break;
      case "refresh":
        await this.refresh();
        break;
    }
  }

  async submitVerdict(verdict: "pass" | "fail"): Promise<void> {
    const card = currentCard(this.state);
    if (!card) return;
    const annotator = this.annotator();
    if (!annotator) {
      this.status = "set your annotator id first";
      this.render();
      return;
    }
    try {
      const response = await this.api.submitVerdict(card, verdict, annotator);
      this.state = withoutDraft(withoutCard(this.state, card, response.progress), card);
      this.status = `${card.item_id}: ${verdict}`;
      this.resetPreview();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // resolved elsewhere: refresh the card, never resubmit blindly
        this.status = `conflict on ${card.item_id}: ${err.message}`;
        await this.refresh();
        return;
      }
      if (err instanceof NetworkError) {
        // keep the verdict as an unsent draft; no silent retry
        this.state = withOffline(
          withDraft(this.state, { card, verdict, reason: err.message }),
          true,
        );
        this.status = `server unreachable; ${card.item_id} kept as unsent draft`;
      } else {
        this.status = err instanceof Error ? err.message : String(err);
      }
    }
    this.render();
  }

  async retryDraft(card: WarningCard): Promise<void> {
    const draft = draftFor(this.state, card);
    if (!draft) return;
    this.state = withoutDraft(this.state, card);
    await this.refreshThenSubmit(draft.card, draft.verdict);
  }

  private async refreshThenSubmit(card: WarningCard, verdict: "pass" | "fail"): Promise<void> {
    await this.refresh();
    const stillQueued = this.state.cards.find((c) => cardKey(c) === cardKey(card));
    if (!stillQueued) {
      this.status = `${card.item_id} was resolved elsewhere`;
      this.render();
      return;
    }
    this.state = { ...this.state, index: this.state.cards.indexOf(stillQueued) };
    await this.submitVerdict(verdict);
  }

  async previewRule(): Promise<void> {
    const card = currentCard(this.state);
    const pattern = this.rulePattern();
    if (!card || !pattern) return;
    try {
      this.preview = await this.api.previewRule(card.item_id, pattern, card.run_id);
      this.previewError = "";
    } catch (err) {
      this.preview = null;
      this.previewError = err instanceof ApiError ? err.message : String(err);
    }
    this.render();
  }

  async submitRule(): Promise<void> {
    const card = currentCard(this.state);
    const pattern = this.rulePattern();
    const annotator = this.annotator();
    if (!card || !pattern) return;
    if (!annotator) {
      this.status = "set your annotator id first";
      this.render();
      return;
    }
    try {
      const response = await this.api.addRule(card.item_id, pattern, annotator);
      this.status = `rule added to ${card.item_id}; suite now v${response.suite_version}`;
      this.resetPreview();
      this.render();
    } catch (err) {
      this.previewError = err instanceof ApiError ? err.message : String(err);
      this.render();
    }
  }

  async rejudge(): Promise<void> {
    try {
      await this.api.startRejudge();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.status = "a re-judge is already running";
        this.render();
        return;
      }
      throw err;
    }
    this.rejudging = true;
    this.render();
    await this.pollRejudge();
  }

  private async pollRejudge(): Promise<void> {
    const status = await this.api.rejudgeStatus();
    if (status.running) {
      window.setTimeout(() => void this.pollRejudge(), 250);
      return;
    }
    this.rejudging = false;
    if (status.error) {
      this.status = `re-judge failed: ${status.error}`;
    } else if (status.report) {
      this.status = `re-judged to v${status.report.to_version}: ${status.report.changed.length} change(s)`;
    }
    await this.refresh();
  }

  private rulePattern(): string {
    return (
      (this.root.querySelector("#rule-pattern") as HTMLInputElement | null)?.value ?? ""
    ).trim();
  }

  private resetPreview(): void {
    this.preview = null;
    this.previewError = "";
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    const s = this.state;
    const progress = s.progress;
    const bar = progress
      ? `<progress max="${progress.total_items}" value="${progress.valid_items}"></progress>
         <span>${progress.valid_items} / ${progress.total_items} valid,
               ${progress.pending} pending</span>`
      : "";
    const offline = s.offline
      ? `<div class="banner offline">server unreachable; showing the last known queue</div>`
      : "";
    const queue = s.cards
      .map((card, i) => {
        const cls = i === s.index ? "queue-item current" : "queue-item";
        const draft = draftFor(s, card);
        const mark = draft ? ` <em class="draft">unsent ${draft.verdict}</em>` : "";
        return `<li class="${cls}" data-index="${i}">
          <code>${esc(card.item_id)}</code> ${esc(card.system)}${mark}</li>`;
      })
      .join("");
    const card = currentCard(s);
    this.root.innerHTML = `
      ${offline}
      <header>
        <h1>lingeval annotation</h1>
        <div class="progress">${bar}</div>
        <label>annotator
          <input id="annotator" value="${esc(this.annotator())}" placeholder="your id">
        </label>
        <label>category filter
          <input id="filter-category" value="${esc(s.filters.category ?? "")}">
        </label>
        <button id="refresh">refresh (g)</button>
      </header>
      <main>
        <ul id="queue">${queue || "<li class='empty'>all resolved ✓</li>"}</ul>
        <section id="card">${card ? this.cardHtml(card) : "<p>nothing to review.</p>"}</section>
      </main>
      <footer><span id="status">${esc(this.status)}</span>
        <span class="hint">j/k next-prev &middot; p pass &middot; f fail &middot; e rule editor</span>
      </footer>`;
    this.bind();
  }

  private cardHtml(card: WarningCard): string {
    const rules = card.rules
      .map(
        (r) =>
          `<li><code>${esc(r.rule)}</code> <small>${esc(r.provenance)}${
            r.by ? " by " + esc(r.by) : ""
          }</small></li>`,
      )
      .join("");
    const matched =
      card.matched_pass_rules.length || card.matched_fail_rules.length
        ? `<p class="conflict">conflicting matches: pass ${JSON.stringify(
            card.matched_pass_rules,
          )}, fail ${JSON.stringify(card.matched_fail_rules)}</p>`
        : "";
    const preview = this.preview
      ? this.preview.matches
          .map(
            (m) =>
              `<p class="preview ${m.matched ? "hit" : "miss"}">
                 ${m.matched ? "matches" : "no match"} on ${esc(m.system)};
                 verdict would be <strong>${esc(m.verdict_with_rule)}</strong>
                 (now ${esc(m.verdict_now)})</p>`,
          )
          .join("")
      : this.previewError
        ? `<p class="preview error">${esc(this.previewError)}</p>`
        : "";
    return `
      <h2>${esc(card.item_id)} <small>${esc(card.phenomenon)} / ${esc(card.category)}</small></h2>
      <dl>
        <dt>source</dt><dd lang="de">${esc(card.source)}</dd>
        <dt>${esc(card.system)} output</dt><dd>${esc(card.output)}</dd>
        ${card.note ? `<dt>note</dt><dd>${esc(card.note)}</dd>` : ""}
      </dl>
      ${matched}
      <div class="verdicts">
        <button id="verdict-pass">pass (p)</button>
        <button id="verdict-fail">fail (f)</button>
        ${draftFor(this.state, card) ? `<button id="retry-draft">retry unsent draft</button>` : ""}
      </div>
      <details open>
        <summary>rules for this item</summary>
        <ul>${rules}</ul>
        <div class="rule-editor">
          <input id="rule-pattern" placeholder="+L:short stories" spellcheck="false">
          <button id="rule-preview">preview</button>
          <button id="rule-submit">add rule</button>
          <button id="rejudge" ${this.rejudging ? "disabled" : ""}>
            ${this.rejudging ? "re-judging…" : "re-judge"}</button>
          ${preview}
        </div>
      </details>`;
  }

  private bind(): void {
    const q = (sel: string) => this.root.querySelector(sel);
    q("#refresh")?.addEventListener("click", () => void this.refresh());
    q("#verdict-pass")?.addEventListener("click", () => void this.submitVerdict("pass"));
    q("#verdict-fail")?.addEventListener("click", () => void this.submitVerdict("fail"));
    q("#rule-preview")?.addEventListener("click", () => void this.previewRule());
    q("#rule-submit")?.addEventListener("click", () => void this.submitRule());
    q("#rejudge")?.addEventListener("click", () => void this.rejudge());
    q("#retry-draft")?.addEventListener("click", () => {
      const card = currentCard(this.state);
      if (card) void this.retryDraft(card);
    });
    q("#annotator")?.addEventListener("change", (event) => {
      window.localStorage.setItem(
        "lingeval.annotator",
        (event.target as HTMLInputElement).value.trim(),
      );
    });
    q("#filter-category")?.addEventListener("change", (event) => {
      const value = (event.target as HTMLInputElement).value.trim();
      this.state = withFilters(this.state, value ? { category: value } : {});
      void this.refresh();
    });
    this.root.querySelectorAll(".queue-item").forEach((el) => {
      el.addEventListener("click", () => {
        const index = Number((el as HTMLElement).dataset.index);
        this.state = { ...this.state, index };
        this.resetPreview();
        this.render();
      });
    });
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const client = new ApiClient((input, init) => window.fetch(input, init), "");
  const app = new App(client, document.getElementById("app") as HTMLElement);
  void app.start();
}
