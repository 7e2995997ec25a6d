/**
 * The chat channel: the message stream, the trajectory boxes, the operator
 * side rail, and the composer.
 *
 * Artist and character messages render in log order. Every character
 * message carries a collapsible box with the six labeled trajectory fields,
 * visually separate from the reply bubble; the box content comes straight
 * from the structured fields the API returns. Speaker-context switches
 * appear as dividers; no-op switches (changed: false) are suppressed.
 * Operator notes live in the side rail only — never inside the stream the
 * character can see.
 */

import {
  ApiClient,
  ApiError,
  ConnectionError,
  Entry,
  LogRecord,
  recordSeq,
} from "./api.js";
import { button, clear, el } from "./dom.js";
import { ViewState } from "./state.js";

const TRAJECTORY_LABELS: Array<[keyof TrajectoryRows, string]> = [
  ["observe", "Observe"],
  ["reflect", "Reflect"],
  ["impression", "User impression"],
  ["behavior", "Behavior"],
  ["action", "Action"],
];

interface TrajectoryRows {
  observe: string;
  reflect: string;
  impression: string;
  behavior: string;
  action: string;
}

export interface ChatViewOptions {
  /** Called when polling discovers the session no longer exists. */
  onSessionGone?: () => void;
  /** Called after a completed turn released a queued context application. */
  onApplyQueuedContext?: (text: string) => Promise<void>;
}

export class ChatView {
  readonly root: HTMLElement;

  private readonly client: ApiClient;
  private readonly state: ViewState;
  private readonly options: ChatViewOptions;

  private records: LogRecord[] = [];
  private cursor = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  private readonly banner: HTMLElement;
  private readonly bannerText: HTMLElement;
  private readonly stream: HTMLElement;
  private readonly noteList: HTMLElement;
  private readonly noteInput: HTMLTextAreaElement;
  private readonly messageInput: HTMLTextAreaElement;
  private readonly speakerInput: HTMLInputElement;
  private readonly sendButton: HTMLButtonElement;
  private readonly pendingIndicator: HTMLElement;

  constructor(client: ApiClient, state: ViewState, options: ChatViewOptions = {}) {
    this.client = client;
    this.state = state;
    this.options = options;

    this.root = el("div", "chat-root");

    this.banner = el("div", "banner hidden");
    this.bannerText = el("span", "banner-text");
    this.banner.append(
      this.bannerText,
      button("Retry", "banner-retry", () => void this.retry()),
    );

    this.stream = el("div", "chat-stream");
    this.stream.addEventListener("scroll", () => {
      this.state.chatScrollTop = this.stream.scrollTop;
    });

    this.noteList = el("div", "note-list");
    this.noteInput = el("textarea", "note-input");
    this.noteInput.placeholder = "Operator note (the character never sees these)";
    this.noteInput.addEventListener("input", () => {
      this.state.noteDraft = this.noteInput.value;
    });
    const rail = el("aside", "side-rail");
    rail.append(
      el("h3", "rail-title", "Operator rail"),
      this.noteList,
      this.noteInput,
      button("Add note", "note-send", () => void this.sendNote()),
    );

    const main = el("div", "chat-main");
    main.append(this.stream, rail);

    this.pendingIndicator = el("div", "pending-indicator hidden", "replying…");

    this.speakerInput = el("input", "speaker-input");
    this.speakerInput.value = "<Artist>";
    this.messageInput = el("textarea", "message-input");
    this.messageInput.placeholder = "Say something…";
    this.messageInput.addEventListener("input", () => {
      this.state.messageDraft = this.messageInput.value;
    });
    this.sendButton = button("Send", "message-send", () => void this.sendMessage());
    const composer = el("div", "composer");
    composer.append(this.speakerInput, this.messageInput, this.sendButton);

    this.root.append(this.banner, main, this.pendingIndicator, composer);
  }

  /** Reset to a session and load its log from the beginning. */
  async open(sessionId: string): Promise<void> {
    this.state.activeSession = sessionId;
    this.records = [];
    this.cursor = 0;
    await this.poll();
  }

  /** Fetch any records past the cursor and re-render if something arrived. */
  async poll(): Promise<void> {
    const sessionId = this.state.activeSession;
    if (sessionId === null) return;
    let page;
    try {
      page = await this.client.readLog(sessionId, this.cursor);
    } catch (error) {
      this.handleError(error);
      return;
    }
    this.hideBanner();
    if (page.records.length === 0) return;
    this.records.push(...page.records);
    this.cursor = page.next_cursor;
    this.render();
  }

  startPolling(intervalMs = 2000): void {
    this.stopPolling();
    this.timer = setInterval(() => void this.poll(), intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async sendMessage(): Promise<void> {
    const sessionId = this.state.activeSession;
    const content = this.messageInput.value.trim();
    if (sessionId === null || !content || this.state.pendingTurn) return;
    this.state.beginTurn();
    this.sendButton.disabled = true;
    this.pendingIndicator.classList.remove("hidden");
    try {
      const speaker = this.speakerInput.value.trim();
      await this.client.postTurn(
        sessionId,
        content,
        speaker && speaker !== "<Artist>" ? speaker : undefined,
      );
      await this.poll();
      // Only a delivered message clears the draft.
      this.messageInput.value = "";
      this.state.messageDraft = "";
    } catch (error) {
      this.handleError(error);
    } finally {
      this.sendButton.disabled = false;
      this.pendingIndicator.classList.add("hidden");
      const queued = this.state.endTurn();
      if (queued !== null && this.options.onApplyQueuedContext) {
        await this.options.onApplyQueuedContext(queued);
      }
    }
  }

  async sendNote(): Promise<void> {
    const sessionId = this.state.activeSession;
    const content = this.noteInput.value.trim();
    if (sessionId === null || !content) return;
    try {
      await this.client.postNote(sessionId, content);
      await this.poll();
      this.noteInput.value = "";
      this.state.noteDraft = "";
    } catch (error) {
      this.handleError(error);
    }
  }

  /** Re-apply drafts and scroll position, e.g. after a channel switch. */
  restore(): void {
    this.messageInput.value = this.state.messageDraft;
    this.noteInput.value = this.state.noteDraft;
    this.stream.scrollTop = this.state.chatScrollTop;
  }

  private async retry(): Promise<void> {
    this.hideBanner();
    await this.poll();
  }

  private handleError(error: unknown): void {
    if (error instanceof ConnectionError) {
      this.showBanner("service unreachable — check that it is running");
      return;
    }
    if (error instanceof ApiError) {
      if (error.status === 404) {
        this.options.onSessionGone?.();
        return;
      }
      this.showBanner(`${error.code}: ${error.message}`);
      return;
    }
    throw error;
  }

  private showBanner(message: string): void {
    this.bannerText.textContent = message;
    this.banner.classList.remove("hidden");
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
  }

  private render(): void {
    const scrollTop = this.stream.scrollTop;
    clear(this.stream);
    clear(this.noteList);

    const characterIds = this.records
      .filter((r) => r.kind === "entry" && r.author_kind === "character")
      .map((r) => recordSeq(r));

    for (const record of this.records) {
      if (record.kind === "context_change") {
        if (record.changed) this.stream.append(this.renderDivider(record.new));
        continue;
      }
      if (record.author_kind === "operator_note") {
        this.noteList.append(this.renderNote(record));
        continue;
      }
      if (record.author_kind === "character") {
        const fromNewest =
          characterIds.length - 1 - characterIds.indexOf(record.entry_id);
        this.stream.append(this.renderCharacterMessage(record, fromNewest));
      } else {
        this.stream.append(this.renderArtistMessage(record));
      }
    }
    this.stream.scrollTop = scrollTop || this.stream.scrollHeight;
  }

  private renderDivider(context: string): HTMLElement {
    const divider = el("div", "context-divider");
    divider.append(el("span", "divider-text", context));
    return divider;
  }

  private renderNote(entry: Entry): HTMLElement {
    const note = el("div", "operator-note");
    note.append(el("div", "note-content", entry.content));
    return note;
  }

  private renderArtistMessage(entry: Entry): HTMLElement {
    const msg = el("div", "msg artist");
    msg.dataset["entryId"] = String(entry.entry_id);
    msg.append(
      el("div", "msg-speaker", entry.speaker_label),
      el("div", "msg-content", entry.content),
    );
    return msg;
  }

  private renderCharacterMessage(entry: Entry, indexFromNewest: number): HTMLElement {
    const msg = el("div", "msg character");
    msg.dataset["entryId"] = String(entry.entry_id);

    if (entry.trajectory) {
      msg.append(
        this.renderTrajectoryBox(
          entry.entry_id,
          entry.speaker_label,
          entry.trajectory,
          this.state.boxOpen(entry.entry_id, indexFromNewest),
        ),
      );
    }

    const bubble = el("div", "reply-bubble");
    bubble.append(el("div", "msg-speaker", entry.speaker_label));
    const isSilence = entry.trajectory?.action === "Silence" && entry.content === "";
    bubble.append(
      isSilence
        ? el("div", "msg-content muted", "(silence)")
        : el("div", "msg-content", entry.content),
    );
    msg.append(bubble);
    return msg;
  }

  private renderTrajectoryBox(
    entryId: number,
    speakerLabel: string,
    trajectory: TrajectoryRows & { reply: string },
    open: boolean,
  ): HTMLElement {
    const box = el("div", "trajectory-box");
    if (open) box.classList.add("open");

    const body = el("div", "box-body");
    for (const [key, label] of TRAJECTORY_LABELS) {
      const row = el("div", "traj-row");
      row.append(
        el("span", "traj-label", label),
        el("span", "traj-value", trajectory[key]),
      );
      body.append(row);
    }
    const replyRow = el("div", "traj-row");
    replyRow.append(
      el("span", "traj-label", speakerLabel),
      el("span", "traj-value", trajectory.reply),
    );
    body.append(replyRow);

    const toggle = button(
      `Action: ${trajectory.action}`,
      "box-toggle",
      () => {
        const nowOpen = !box.classList.contains("open");
        box.classList.toggle("open", nowOpen);
        this.state.toggleBox(entryId, nowOpen);
      },
    );
    box.append(toggle, body);
    return box;
  }
}
