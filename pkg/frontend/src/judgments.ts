/** Blinded pairwise judgment flow.
 *
 * Presents the two definitions strictly as "A" and "B": nothing in the DOM
 * may identify how either one was produced. Verdicts that fail to send are
 * retained locally and can be retried; duplicates surface as a notice and
 * the queue advances.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Accuracy, JudgmentBody, PendingPair, Preference } from "./types.js";

const ACCURACY_OPTIONS: { value: Accuracy; label: string }[] = [
  { value: "correct", label: "Correct" },
  { value: "incorrect", label: "Incorrect" },
  { value: "not_applicable", label: "Cannot judge" },
];

export class JudgmentFlow {
  private queue: PendingPair[] = [];
  private retryBuffer: JudgmentBody[] = [];

  constructor(
    private api: ApiClient,
    private container: HTMLElement,
    private readerId: string,
  ) {}

  get pendingRetries(): readonly JudgmentBody[] {
    return this.retryBuffer;
  }

  async start(): Promise<void> {
    this.queue = await this.api.getPendingPairs(this.readerId);
    this.renderCurrent();
  }

  private current(): PendingPair | undefined {
    return this.queue[0];
  }

  private renderCurrent(): void {
    const pair = this.current();
    this.container.replaceChildren();
    if (!pair) {
      const done = document.createElement("p");
      done.className = "empty-state";
      done.textContent = "All pairs have been judged. Thank you!";
      this.container.appendChild(done);
      return;
    }
    this.container.appendChild(this.pairForm(pair));
  }

  private pairForm(pair: PendingPair): HTMLElement {
    const form = document.createElement("form");
    form.className = "judgment-form";
    form.dataset.pairId = pair.pair_id;

    const heading = document.createElement("h3");
    heading.textContent = `Term: ${pair.term}`;
    form.appendChild(heading);

    const remaining = document.createElement("p");
    remaining.className = "queue-status";
    remaining.textContent = `${this.queue.length} pair(s) left to judge`;
    form.appendChild(remaining);

    form.appendChild(slotBlock("A", pair.slot_a));
    form.appendChild(slotBlock("B", pair.slot_b));

    const bothPresent = pair.slot_a !== null && pair.slot_b !== null;
    if (bothPresent) {
      form.appendChild(preferenceBlock());
    }

    const notice = document.createElement("p");
    notice.className = "notice";
    notice.hidden = true;
    form.appendChild(notice);

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Submit judgment";
    form.appendChild(submit);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit(pair, form, notice);
    });
    return form;
  }

  private readVerdict(pair: PendingPair, form: HTMLFormElement): JudgmentBody | null {
    const accuracyA = pair.slot_a === null ? "not_applicable" : readRadio(form, "accuracy-A");
    const accuracyB = pair.slot_b === null ? "not_applicable" : readRadio(form, "accuracy-B");
    const bothPresent = pair.slot_a !== null && pair.slot_b !== null;
    const preference = bothPresent ? readRadio(form, "preference") : null;
    if (accuracyA === null || accuracyB === null || (bothPresent && preference === null)) {
      return null;
    }
    return {
      pair_id: pair.pair_id,
      reader_id: this.readerId,
      accuracy_a: accuracyA as Accuracy,
      accuracy_b: accuracyB as Accuracy,
      preference: preference as Preference | null,
    };
  }

  private async submit(pair: PendingPair, form: HTMLFormElement, notice: HTMLElement): Promise<void> {
    const body = this.readVerdict(pair, form);
    if (body === null) {
      notice.hidden = false;
      notice.textContent = "Please answer every question before submitting.";
      return;
    }
    await this.send(body);
  }

  /** Send one verdict; also used to flush the retry buffer. */
  async send(body: JudgmentBody): Promise<void> {
    try {
      await this.api.postJudgment(body);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.advance(`Pair ${body.pair_id} was already judged; moving on.`);
        return;
      }
      if (err instanceof ApiError && err.status === 0) {
        this.retryBuffer.push(body);
        this.showRetryBanner();
        return;
      }
      throw err;
    }
    this.advance();
  }

  async retryPending(): Promise<void> {
    const buffered = this.retryBuffer;
    this.retryBuffer = [];
    for (const body of buffered) {
      await this.send(body);
    }
  }

  private advance(message?: string): void {
    this.queue.shift();
    this.renderCurrent();
    if (message) {
      const note = document.createElement("p");
      note.className = "notice";
      note.textContent = message;
      this.container.prepend(note);
    }
  }

  private showRetryBanner(): void {
    let banner = this.container.querySelector<HTMLElement>(".retry-banner");
    if (!banner) {
      banner = document.createElement("div");
      banner.className = "retry-banner";
      banner.setAttribute("role", "alert");
      const label = document.createElement("span");
      banner.appendChild(label);
      const button = document.createElement("button");
      button.textContent = "Retry sending";
      button.addEventListener("click", () => void this.retryPending());
      banner.appendChild(button);
      this.container.prepend(banner);
    }
    const label = banner.querySelector("span");
    if (label) {
      label.textContent = `${this.retryBuffer.length} verdict(s) saved locally; will be sent on retry.`;
    }
  }
}

function slotBlock(slotLabel: "A" | "B", text: string | null): HTMLElement {
  const block = document.createElement("fieldset");
  block.className = "slot-block";
  block.dataset.slot = slotLabel;

  const legend = document.createElement("legend");
  legend.textContent = `Definition ${slotLabel}`;
  block.appendChild(legend);

  const body = document.createElement("p");
  body.className = "slot-text";
  body.textContent = text ?? "(no definition was produced for this slot)";
  block.appendChild(body);

  if (text !== null) {
    const label = document.createElement("p");
    label.textContent = `Is definition ${slotLabel} accurate?`;
    block.appendChild(label);
    block.appendChild(radioGroup(`accuracy-${slotLabel}`, ACCURACY_OPTIONS));
  }
  return block;
}

function preferenceBlock(): HTMLElement {
  const block = document.createElement("fieldset");
  block.className = "preference-block";
  const legend = document.createElement("legend");
  legend.textContent = "Which definition is better overall?";
  block.appendChild(legend);
  block.appendChild(
    radioGroup("preference", [
      { value: "slot_a", label: "Definition A" },
      { value: "slot_b", label: "Definition B" },
      { value: "tie", label: "Tie" },
    ]),
  );
  return block;
}

function radioGroup(name: string, options: { value: string; label: string }[]): HTMLElement {
  const group = document.createElement("div");
  group.className = "radio-group";
  for (const option of options) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = name;
    input.value = option.value;
    label.appendChild(input);
    label.appendChild(document.createTextNode(option.label));
    group.appendChild(label);
  }
  return group;
}

function readRadio(form: HTMLFormElement, name: string): string | null {
  const checked = form.querySelector<HTMLInputElement>(`input[name="${name}"]:checked`);
  return checked ? checked.value : null;
}
