/** DOM rendering and interaction for the review queue.
 *
 * Arms render in exactly the order the server sent them, under neutral
 * labels; model names never reach this layer at all. One submission is in
 * flight at a time, and server errors surface verbatim in a retry banner.
 */

import { ApiClient, ApiError, ALL_GOOD, NONE_GOOD } from "./api.js";
import type { Bucket, ItemPayload, Mode, NextResponse } from "./api.js";
import {
  BUCKETS,
  BUCKET_LABELS,
  Draft,
  armLabel,
  canSubmit,
  draftEvents,
  emptyDraft,
  setChoice,
  setGrade,
} from "./state.js";

const SPEAKER_LABELS: Record<string, string> = { DR: "Doctor", PT: "Patient" };

export class ReviewApp {
  private mode: Mode | null = null;
  private item: ItemPayload | null = null;
  private itemsTotal = 0;
  private cursor = 0;
  private draft: Draft = emptyDraft();
  private inFlight = false;
  private error: string | null = null;
  private focusedArm = 0;
  private editingArm: string | null = null;
  private toast: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly sessionId: string,
  ) {
    this.root.addEventListener("keydown", (ev) => this.onKey(ev as KeyboardEvent));
  }

  async start(): Promise<void> {
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    let next: NextResponse;
    try {
      next = await this.api.next(this.sessionId);
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
      this.render();
      return;
    }
    this.error = null;
    this.itemsTotal = next.items;
    this.mode = next.mode;
    if (next.done) {
      this.item = null;
    } else {
      this.item = next.item;
      this.cursor = next.cursor;
      this.draft = emptyDraft();
      this.focusedArm = 0;
      this.editingArm = null;
    }
    this.render();
  }

  /** POST the draft's events, then advance to the next item. */
  async submitDraft(): Promise<void> {
    if (!this.item || !this.mode || this.inFlight) {
      return;
    }
    if (!canSubmit(this.mode, this.item, this.draft)) {
      return;
    }
    this.inFlight = true;
    this.render();
    try {
      for (const event of draftEvents(this.mode, this.item, this.draft)) {
        await this.api.submitEvent(this.sessionId, this.item.item_id, event);
      }
    } catch (err) {
      this.error = err instanceof ApiError ? err.message : String(err);
      this.inFlight = false;
      this.render();
      return;
    }
    this.inFlight = false;
    this.error = null;
    await this.fetchNext();
  }

  async submitEdit(armId: string, editedText: string): Promise<void> {
    if (!this.item || this.inFlight) {
      return;
    }
    this.inFlight = true;
    this.render();
    try {
      await this.api.submitEvent(this.sessionId, this.item.item_id, {
        type: "edit",
        arm_id: armId,
        edited_text: editedText,
      });
      this.toast = "Edit saved to the feedback set.";
      this.editingArm = null;
    } catch (err) {
      this.error = err instanceof ApiError ? err.message : String(err);
    }
    this.inFlight = false;
    this.render();
  }

  private onKey(ev: KeyboardEvent): void {
    if (!this.item || !this.mode || this.editingArm !== null) {
      return;
    }
    const key = ev.key.toLowerCase();
    if (this.mode === "grade" && key >= "1" && key <= "4") {
      const arm = this.item.arms[this.focusedArm];
      if (arm) {
        this.draft = setGrade(this.draft, arm.arm_id, BUCKETS[Number(key) - 1]!);
        this.render();
      }
    } else if (this.mode === "compare" && key === "a") {
      this.draft = setChoice(this.draft, ALL_GOOD);
      this.render();
    } else if (this.mode === "compare" && key === "n") {
      this.draft = setChoice(this.draft, NONE_GOOD);
      this.render();
    } else if (key === "enter") {
      void this.submitDraft();
    } else if (key === "tab" && this.item.arms.length > 1) {
      ev.preventDefault();
      this.focusedArm = (this.focusedArm + 1) % this.item.arms.length;
      this.render();
    }
  }

  // -- rendering --

  render(): void {
    this.root.textContent = "";
    this.root.appendChild(this.header());
    if (this.error !== null) {
      this.root.appendChild(this.errorBanner());
    }
    if (this.toast !== null) {
      const toast = el("div", "toast", this.toast);
      this.root.appendChild(toast);
      this.toast = null;
    }
    if (this.item === null) {
      if (this.error === null) {
        this.root.appendChild(this.doneScreen());
      }
      return;
    }
    this.root.appendChild(this.dialogue(this.item));
    this.root.appendChild(this.arms(this.item));
    this.root.appendChild(this.controls(this.item));
  }

  private header(): HTMLElement {
    const header = el("header", "header");
    header.appendChild(el("h1", "title", "Summary review"));
    const progress =
      this.item === null
        ? `${this.itemsTotal} items`
        : `Item ${this.cursor + 1} of ${this.itemsTotal}`;
    const sub = el("div", "progress", progress);
    sub.dataset.cursor = String(this.cursor);
    header.appendChild(sub);
    return header;
  }

  private errorBanner(): HTMLElement {
    const banner = el("div", "error-banner");
    banner.appendChild(el("span", "error-message", this.error ?? ""));
    const retry = el("button", "retry", "Retry") as HTMLButtonElement;
    retry.addEventListener("click", () => void this.fetchNext());
    banner.appendChild(retry);
    return banner;
  }

  private doneScreen(): HTMLElement {
    const done = el("section", "done");
    done.appendChild(el("h2", "", "All items reviewed"));
    const link = el("a", "report-link", "View the session report") as HTMLAnchorElement;
    link.href = this.api.reportUrl(this.sessionId);
    done.appendChild(link);
    return done;
  }

  private dialogue(item: ItemPayload): HTMLElement {
    const section = el("section", "dialogue");
    for (const turn of item.snippet.turns) {
      const row = el("div", `turn turn-${turn.speaker.toLowerCase()}`);
      row.appendChild(el("span", "speaker", SPEAKER_LABELS[turn.speaker] ?? turn.speaker));
      row.appendChild(el("span", "text", turn.text));
      section.appendChild(row);
    }
    return section;
  }

  private arms(item: ItemPayload): HTMLElement {
    const section = el("section", "arms");
    item.arms.forEach((arm, position) => {
      const card = el("article", "arm");
      card.dataset.armId = arm.arm_id;
      if (position === this.focusedArm) {
        card.classList.add("focused");
      }
      card.addEventListener("click", () => {
        this.focusedArm = position;
      });
      card.appendChild(el("h3", "arm-label", armLabel(position)));
      card.appendChild(el("p", "summary", arm.summary));
      if (this.mode === "grade") {
        card.appendChild(this.bucketPicker(arm.arm_id));
      } else {
        card.appendChild(this.bestButton(arm.arm_id, position));
      }
      card.appendChild(this.editControls(arm.arm_id, arm.summary));
      section.appendChild(card);
    });
    return section;
  }

  private bucketPicker(armId: string): HTMLElement {
    const picker = el("div", "buckets");
    BUCKETS.forEach((bucket, i) => {
      const label = el("label", "bucket") as HTMLLabelElement;
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `bucket-${armId}`;
      input.value = bucket;
      input.checked = this.draft.grades[armId] === bucket;
      input.addEventListener("change", () => {
        this.draft = setGrade(this.draft, armId, bucket);
        this.render();
      });
      label.appendChild(input);
      label.appendChild(document.createTextNode(`${i + 1}. ${BUCKET_LABELS[bucket]}`));
      picker.appendChild(label);
    });
    return picker;
  }

  private bestButton(armId: string, position: number): HTMLElement {
    const button = el(
      "button",
      "pick-best",
      `Best: ${armLabel(position)}`,
    ) as HTMLButtonElement;
    if (this.draft.choice === armId) {
      button.classList.add("selected");
    }
    button.addEventListener("click", () => {
      this.draft = setChoice(this.draft, armId);
      this.render();
    });
    return button;
  }

  private editControls(armId: string, summary: string): HTMLElement {
    const wrap = el("div", "edit");
    if (this.editingArm === armId) {
      const area = document.createElement("textarea");
      area.className = "edit-text";
      area.value = summary;
      const save = el("button", "save-edit", "Save edit") as HTMLButtonElement;
      save.addEventListener("click", () => void this.submitEdit(armId, area.value));
      const cancel = el("button", "cancel-edit", "Cancel") as HTMLButtonElement;
      cancel.addEventListener("click", () => {
        this.editingArm = null;
        this.render();
      });
      wrap.append(area, save, cancel);
    } else {
      const open = el("button", "open-edit", "Edit") as HTMLButtonElement;
      open.addEventListener("click", () => {
        this.editingArm = armId;
        this.render();
      });
      wrap.appendChild(open);
    }
    return wrap;
  }

  private controls(item: ItemPayload): HTMLElement {
    const bar = el("div", "controls");
    if (this.mode === "compare") {
      const allGood = el("button", "all-good", "All good (A)") as HTMLButtonElement;
      if (this.draft.choice === ALL_GOOD) {
        allGood.classList.add("selected");
      }
      allGood.addEventListener("click", () => {
        this.draft = setChoice(this.draft, ALL_GOOD);
        this.render();
      });
      const noneGood = el("button", "none-good", "None good (N)") as HTMLButtonElement;
      if (this.draft.choice === NONE_GOOD) {
        noneGood.classList.add("selected");
      }
      noneGood.addEventListener("click", () => {
        this.draft = setChoice(this.draft, NONE_GOOD);
        this.render();
      });
      bar.append(allGood, noneGood);
    }
    const submit = el("button", "submit", this.inFlight ? "Submitting…" : "Submit") as HTMLButtonElement;
    submit.disabled =
      this.inFlight || !this.mode || !canSubmit(this.mode, item, this.draft);
    submit.addEventListener("click", () => void this.submitDraft());
    bar.appendChild(submit);
    return bar;
  }

  // test hooks
  currentDraft(): Draft {
    return this.draft;
  }

  applyBucket(armId: string, bucket: Bucket): void {
    this.draft = setGrade(this.draft, armId, bucket);
    this.render();
  }
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}
