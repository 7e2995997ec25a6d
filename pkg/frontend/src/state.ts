/**
 * Client-side view state for the studio.
 *
 * One instance drives both channels. Exactly one channel is visible at a
 * time; switching channels must never lose the chat scroll position or any
 * unsent drafts, so both live here rather than in the DOM that gets hidden.
 */

export type Channel = "chat" | "configuration";

export type StateListener = () => void;

export class ViewState {
  activeSession: string | null = null;
  channel: Channel = "chat";

  /** Unsent message draft in the chat composer. */
  messageDraft = "";
  /** Unsent operator-note draft in the side rail. */
  noteDraft = "";
  /** Draft in the speaker-context editor (may differ from the applied one). */
  speakerContextDraft = "";
  /** Chat scroll offset, restored when the chat channel comes back. */
  chatScrollTop = 0;

  /** True while a turn request is in flight. */
  pendingTurn = false;

  /** Explicit per-entry expansion of trajectory boxes (entry_id -> open). */
  private expansion = new Map<number, boolean>();

  /** Context applications deferred because a turn was pending. */
  private queuedContext: string | null = null;

  private listeners: StateListener[] = [];

  subscribe(listener: StateListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  notify(): void {
    for (const listener of this.listeners) listener();
  }

  switchChannel(channel: Channel): void {
    if (this.channel === channel) return;
    this.channel = channel;
    this.notify();
  }

  /**
   * Whether the trajectory box for an entry starts open. Boxes default
   * collapsed once a session grows past the 20 most recent turns, unless
   * the user toggled that entry by hand.
   */
  boxOpen(entryId: number, indexFromNewest: number): boolean {
    const explicit = this.expansion.get(entryId);
    if (explicit !== undefined) return explicit;
    return indexFromNewest < 20;
  }

  toggleBox(entryId: number, open: boolean): void {
    this.expansion.set(entryId, open);
  }

  beginTurn(): void {
    this.pendingTurn = true;
    this.notify();
  }

  /** Finish the in-flight turn and hand back any context change queued behind it. */
  endTurn(): string | null {
    this.pendingTurn = false;
    const queued = this.queuedContext;
    this.queuedContext = null;
    this.notify();
    return queued;
  }

  /** Queue a context application until the pending turn completes. */
  queueContext(text: string): void {
    this.queuedContext = text;
  }
}
