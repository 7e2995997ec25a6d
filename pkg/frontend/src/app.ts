/**
 * The studio shell: two channels (chat and configuration) behind a tab
 * switch, a session picker for the empty state, and the wiring between the
 * chat view, the speaker-context control, and the config editor.
 *
 * Exactly one channel is visible at a time. Switching hides the other
 * channel's DOM instead of destroying it, so the chat scroll position and
 * any unsent drafts survive the round trip.
 */

import { ApiClient, Session } from "./api.js";
import { ChatView } from "./chat.js";
import { ConfigView } from "./config.js";
import { SpeakerContextControl } from "./context.js";
import { button, clear, el } from "./dom.js";
import { Channel, ViewState } from "./state.js";

export class StudioApp {
  readonly root: HTMLElement;
  readonly state: ViewState;
  readonly chat: ChatView;
  readonly config: ConfigView;
  readonly contextControl: SpeakerContextControl;

  private readonly client: ApiClient;
  private readonly tabs = new Map<Channel, HTMLButtonElement>();
  private readonly chatPanel: HTMLElement;
  private readonly configPanel: HTMLElement;
  private readonly emptyState: HTMLElement;
  private readonly sessionList: HTMLElement;

  constructor(client: ApiClient) {
    this.client = client;
    this.state = new ViewState();
    this.root = el("div", "studio-root");

    this.chat = new ChatView(client, this.state, {
      onSessionGone: () => void this.showSessionPicker(),
      onApplyQueuedContext: (text) => this.contextControl.applyNow(text),
    });
    this.contextControl = new SpeakerContextControl(client, this.state, {
      onApplied: () => this.chat.poll(),
    });
    this.config = new ConfigView(client);

    const tabBar = el("div", "tab-bar");
    for (const channel of ["chat", "configuration"] as Channel[]) {
      const tab = button(channel, `tab tab-${channel}`, () => this.switchChannel(channel));
      this.tabs.set(channel, tab);
      tabBar.append(tab);
    }

    this.chatPanel = el("div", "channel channel-chat");
    this.chatPanel.append(this.contextControl.root, this.chat.root);

    this.configPanel = el("div", "channel channel-configuration hidden");
    this.configPanel.append(this.config.root);

    this.sessionList = el("ul", "session-list");
    this.emptyState = el("div", "empty-state hidden");
    this.emptyState.append(
      el("p", "empty-text", "That session is gone. Pick another one:"),
      this.sessionList,
    );

    this.root.append(tabBar, this.emptyState, this.chatPanel, this.configPanel);
    this.applyChannel();
  }

  /** Open a session in the chat channel and load its profile into config. */
  async open(sessionId: string): Promise<void> {
    this.emptyState.classList.add("hidden");
    const doc = await this.client.getSession(sessionId);
    await this.chat.open(sessionId);
    this.contextControl.setCurrent(doc.session.speaker_context);
    await this.config.load(doc.session.profile_id);
  }

  switchChannel(channel: Channel): void {
    this.state.switchChannel(channel);
    this.applyChannel();
  }

  private applyChannel(): void {
    const chatVisible = this.state.channel === "chat";
    this.chatPanel.classList.toggle("hidden", !chatVisible);
    this.configPanel.classList.toggle("hidden", chatVisible);
    for (const [channel, tab] of this.tabs) {
      tab.classList.toggle("active", channel === this.state.channel);
    }
    if (chatVisible) this.chat.restore();
  }

  /** Empty state with a session picker, e.g. after a 404 on a stale session. */
  async showSessionPicker(): Promise<void> {
    this.chat.stopPolling();
    this.state.activeSession = null;
    this.emptyState.classList.remove("hidden");
    clear(this.sessionList);
    const listing = await this.client.listSessions();
    for (const session of listing.sessions) {
      const item = el("li", "session-item");
      item.append(
        button(this.describeSession(session), "session-pick", () => {
          void this.open(session.session_id);
        }),
      );
      this.sessionList.append(item);
    }
  }

  private describeSession(session: Session): string {
    return `${session.session_id} — ${session.speaker_context}`;
  }
}
