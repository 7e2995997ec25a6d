/**
 * The speaker-context control: one editable line telling the character who
 * is talking ("Now, … is talking to you"), with presets for the three most
 * common roles. Applying it mid-turn is queued until the turn completes so
 * the switch never lands between a message and its reply.
 */

import { ApiClient, ContextChange } from "./api.js";
import { button, el } from "./dom.js";
import { ViewState } from "./state.js";

export const CONTEXT_PRESETS: Array<{ label: string; text: string }> = [
  { label: "creator", text: "Now, your creator is talking to you" },
  { label: "stranger", text: "Now, a stranger is talking to you" },
  { label: "friend", text: "Now, your best friend is talking to you" },
];

export interface ContextControlOptions {
  /** Called after the service accepted a real change (changed: true). */
  onApplied?: (change: ContextChange) => Promise<void> | void;
}

export class SpeakerContextControl {
  readonly root: HTMLElement;

  private readonly client: ApiClient;
  private readonly state: ViewState;
  private readonly options: ContextControlOptions;

  private readonly input: HTMLInputElement;
  private readonly hint: HTMLElement;

  constructor(
    client: ApiClient,
    state: ViewState,
    options: ContextControlOptions = {},
  ) {
    this.client = client;
    this.state = state;
    this.options = options;

    this.root = el("div", "context-control");
    this.input = el("input", "context-input");
    this.input.placeholder = "Now, … is talking to you";
    this.input.addEventListener("input", () => {
      this.state.speakerContextDraft = this.input.value;
    });

    const presets = el("div", "context-presets");
    for (const preset of CONTEXT_PRESETS) {
      presets.append(
        button(preset.label, "context-preset", () => {
          this.input.value = preset.text;
          this.state.speakerContextDraft = preset.text;
        }),
      );
    }

    this.hint = el("span", "context-hint", "");
    this.root.append(
      el("span", "context-title", "Speaker"),
      this.input,
      presets,
      button("Apply", "context-apply", () => void this.apply()),
      this.hint,
    );
  }

  /** Reflect the session's current context without applying anything. */
  setCurrent(text: string): void {
    this.input.value = text;
    this.state.speakerContextDraft = text;
  }

  async apply(): Promise<void> {
    const text = this.input.value.trim();
    if (!text) return;
    if (this.state.pendingTurn) {
      this.state.queueContext(text);
      this.hint.textContent = "queued until the current turn completes";
      return;
    }
    await this.applyNow(text);
  }

  /** Send the context to the service immediately (also used for queued applies). */
  async applyNow(text: string): Promise<void> {
    const sessionId = this.state.activeSession;
    if (sessionId === null) return;
    const result = await this.client.setSpeakerContext(sessionId, text);
    this.hint.textContent = result.context_change.changed ? "" : "unchanged";
    if (result.context_change.changed && this.options.onApplied) {
      await this.options.onApplied(result.context_change);
    }
  }
}
