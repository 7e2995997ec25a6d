/**
 * The configuration channel: a form mirroring the character profile, a
 * live preview of the prompt the current edits would render, and the
 * revision browser with per-revision prompts and line diffs.
 *
 * Saving goes through the profile PATCH endpoint; the response's revision
 * is shown immediately — its diff with the added/removed lines highlighted
 * and the prompt the service rendered for it.
 */

import { ApiClient, ApiError, ActionSpec, Profile, Revision } from "./api.js";
import { button, clear, el } from "./dom.js";
import { buildPromptPreview, ProfileFields } from "./promptPreview.js";

const TEXT_FIELDS: Array<{
  key: "name" | "pronoun" | "backstory" | "traits" | "dialogue_style" | "scenario" | "speaker_context";
  label: string;
  multiline: boolean;
}> = [
  { key: "name", label: "Name", multiline: false },
  { key: "pronoun", label: "Pronoun", multiline: false },
  { key: "backstory", label: "Backstory", multiline: true },
  { key: "traits", label: "Traits", multiline: true },
  { key: "dialogue_style", label: "Dialogue style", multiline: true },
  { key: "scenario", label: "Scenario", multiline: true },
  { key: "speaker_context", label: "Default speaker context", multiline: false },
];

interface ActionRow {
  root: HTMLElement;
  name: HTMLInputElement;
  description: HTMLInputElement;
}

export class ConfigView {
  readonly root: HTMLElement;

  private readonly client: ApiClient;

  private profile: Profile | null = null;
  private revisions: Revision[] = [];

  private readonly inputs = new Map<string, HTMLInputElement | HTMLTextAreaElement>();
  private readonly fieldErrors = new Map<string, HTMLElement>();
  private readonly samplesInput: HTMLTextAreaElement;
  private readonly actionRowsHost: HTMLElement;
  private actionRows: ActionRow[] = [];
  private readonly noteInput: HTMLInputElement;
  private readonly saveButton: HTMLButtonElement;
  private readonly saveError: HTMLElement;
  private readonly previewText: HTMLElement;
  private readonly revisionList: HTMLElement;
  private readonly diffFrom: HTMLSelectElement;
  private readonly diffTo: HTMLSelectElement;
  private readonly diffView: HTMLElement;
  private readonly revisionPrompt: HTMLElement;

  constructor(client: ApiClient) {
    this.client = client;
    this.root = el("div", "config-root");

    const form = el("div", "profile-form");
    for (const field of TEXT_FIELDS) {
      const row = el("div", "form-row");
      const label = el("label", "form-label", field.label);
      const input = field.multiline
        ? el("textarea", "form-input")
        : el("input", "form-input");
      input.dataset["field"] = field.key;
      input.addEventListener("input", () => this.onEdit());
      const error = el("span", "field-error hidden");
      row.append(label, input, error);
      form.append(row);
      this.inputs.set(field.key, input);
      this.fieldErrors.set(field.key, error);
    }

    const samplesRow = el("div", "form-row");
    this.samplesInput = el("textarea", "form-input samples-input");
    this.samplesInput.addEventListener("input", () => this.onEdit());
    samplesRow.append(
      el("label", "form-label", "Dialogue samples (one per line)"),
      this.samplesInput,
    );
    form.append(samplesRow);

    this.actionRowsHost = el("div", "action-rows");
    const actionsRow = el("div", "form-row actions-editor");
    actionsRow.append(
      el("label", "form-label", "Actions"),
      this.actionRowsHost,
      button("Add action", "action-add", () => {
        this.addActionRow({ name: "", description: "" });
        this.onEdit();
      }),
    );
    form.append(actionsRow);

    this.noteInput = el("input", "change-note");
    this.noteInput.placeholder = "Change note";
    this.saveButton = button("Save revision", "save-button", () => void this.save());
    this.saveError = el("div", "save-error hidden");
    const saveRow = el("div", "form-row save-row");
    saveRow.append(this.noteInput, this.saveButton, this.saveError);
    form.append(saveRow);

    this.previewText = el("pre", "preview-text");
    const preview = el("div", "prompt-preview");
    preview.append(el("h3", "pane-title", "Prompt preview (unsaved)"), this.previewText);

    this.revisionList = el("ul", "revision-list");
    this.diffFrom = document.createElement("select");
    this.diffFrom.className = "diff-from";
    this.diffTo = document.createElement("select");
    this.diffTo.className = "diff-to";
    this.diffFrom.addEventListener("change", () => void this.showSelectedDiff());
    this.diffTo.addEventListener("change", () => void this.showSelectedDiff());
    this.diffView = el("div", "diff-view");
    this.revisionPrompt = el("pre", "revision-prompt");
    const browser = el("div", "revision-browser");
    const diffControls = el("div", "diff-controls");
    diffControls.append(
      el("span", "diff-label", "Diff"),
      this.diffFrom,
      el("span", "diff-arrow", "→"),
      this.diffTo,
    );
    browser.append(
      el("h3", "pane-title", "Revisions"),
      this.revisionList,
      diffControls,
      this.diffView,
      el("h3", "pane-title", "Revision prompt"),
      this.revisionPrompt,
    );

    this.root.append(form, preview, browser);
  }

  async load(profileId: string): Promise<void> {
    const doc = await this.client.getProfile(profileId);
    this.profile = doc.profile;
    const listing = await this.client.listRevisions(profileId);
    this.revisions = listing.revisions;
    this.fillForm(doc.profile);
    this.renderRevisions();
    this.updatePreview();
    this.validate();
  }

  private fillForm(profile: Profile): void {
    for (const field of TEXT_FIELDS) {
      const input = this.inputs.get(field.key);
      if (input) input.value = profile[field.key];
    }
    this.samplesInput.value = profile.dialogue_samples.join("\n");
    clear(this.actionRowsHost);
    this.actionRows = [];
    for (const action of profile.actions) this.addActionRow(action);
  }

  private addActionRow(action: ActionSpec): void {
    const root = el("div", "action-row");
    const name = el("input", "action-name");
    name.value = action.name;
    name.addEventListener("input", () => this.onEdit());
    const description = el("input", "action-description");
    description.value = action.description;
    description.addEventListener("input", () => this.onEdit());
    const row: ActionRow = { root, name, description };
    root.append(
      name,
      description,
      button("Remove", "action-remove", () => {
        root.remove();
        this.actionRows = this.actionRows.filter((r) => r !== row);
        this.onEdit();
      }),
    );
    this.actionRowsHost.append(root);
    this.actionRows.push(row);
  }

  /** The form's current content as profile fields. */
  currentFields(): ProfileFields {
    const text = (key: string): string => this.inputs.get(key)?.value ?? "";
    return {
      name: text("name"),
      pronoun: text("pronoun"),
      backstory: text("backstory"),
      traits: text("traits"),
      dialogue_style: text("dialogue_style"),
      scenario: text("scenario"),
      speaker_context: text("speaker_context"),
      dialogue_samples: this.samplesInput.value
        .split("\n")
        .map((line) => line.trim())
        .filter((line) => line),
      actions: this.actionRows.map((row) => ({
        name: row.name.value.trim(),
        description: row.description.value.trim(),
      })),
    };
  }

  private onEdit(): void {
    this.validate();
    this.updatePreview();
  }

  private setFieldError(key: string, message: string | null): void {
    const node = this.fieldErrors.get(key);
    if (!node) return;
    if (message === null) {
      node.classList.add("hidden");
      node.textContent = "";
    } else {
      node.classList.remove("hidden");
      node.textContent = message;
    }
  }

  /** Inline validation; the save button stays disabled while anything is wrong. */
  validate(): boolean {
    const fields = this.currentFields();
    let valid = true;

    if (!fields.name.trim()) {
      this.setFieldError("name", "name must not be blank");
      valid = false;
    } else {
      this.setFieldError("name", null);
    }

    const seen = new Set<string>();
    for (const action of fields.actions) {
      if (!action.name) {
        valid = false;
      } else if (seen.has(action.name)) {
        valid = false;
      }
      seen.add(action.name);
    }

    if (valid && this.profile !== null && this.buildPatch() === null) {
      // Nothing changed; saving would create an empty revision.
      valid = false;
    }

    this.saveButton.disabled = !valid;
    return valid;
  }

  private updatePreview(): void {
    const fields = this.currentFields();
    this.previewText.textContent = fields.name.trim()
      ? buildPromptPreview(fields)
      : "";
  }

  /** Only the fields that differ from the loaded profile; null if none do. */
  private buildPatch(): Record<string, unknown> | null {
    if (this.profile === null) return null;
    const fields = this.currentFields();
    const patch: Record<string, unknown> = {};
    for (const field of TEXT_FIELDS) {
      if (fields[field.key] !== this.profile[field.key]) {
        patch[field.key] = fields[field.key];
      }
    }
    if (fields.dialogue_samples.join("\n") !== this.profile.dialogue_samples.join("\n")) {
      patch["dialogue_samples"] = fields.dialogue_samples;
    }
    const asPairs = (actions: ActionSpec[]) =>
      JSON.stringify(actions.map((a) => [a.name, a.description]));
    if (asPairs(fields.actions) !== asPairs(this.profile.actions)) {
      patch["actions"] = fields.actions;
    }
    return Object.keys(patch).length > 0 ? patch : null;
  }

  async save(): Promise<void> {
    if (this.profile === null || !this.validate()) return;
    const patch = this.buildPatch();
    if (patch === null) return;
    this.saveError.classList.add("hidden");
    let result;
    try {
      result = await this.client.updateProfile(
        this.profile.id,
        patch,
        this.noteInput.value.trim(),
      );
    } catch (error) {
      if (error instanceof ApiError) {
        this.saveError.textContent = `${error.code}: ${error.message}`;
        this.saveError.classList.remove("hidden");
        return;
      }
      throw error;
    }

    this.profile = result.profile;
    this.revisions = [...this.revisions, result.revision];
    this.fillForm(result.profile);
    this.noteInput.value = "";
    this.renderRevisions();
    this.renderDiff(result.revision.diff);
    this.validate();

    // Show the prompt the service rendered for the new revision.
    const detail = await this.client.getRevision(
      result.profile.id,
      result.revision.revision_number,
    );
    this.revisionPrompt.textContent = detail.rendered_prompt;
  }

  private renderRevisions(): void {
    clear(this.revisionList);
    for (const revision of this.revisions) {
      const item = el("li", "revision-item");
      item.dataset["revision"] = String(revision.revision_number);
      const when = new Date(revision.timestamp).toISOString();
      item.append(
        el("span", "revision-number", `#${revision.revision_number}`),
        el("span", "revision-time", when),
        el("span", "revision-note", revision.change_note),
      );
      item.addEventListener("click", () => void this.selectRevision(revision.revision_number));
      this.revisionList.append(item);
    }

    const numbers = this.revisions.map((r) => String(r.revision_number));
    for (const select of [this.diffFrom, this.diffTo]) {
      const previous = select.value;
      clear(select as unknown as HTMLElement);
      for (const n of numbers) {
        const option = document.createElement("option");
        option.value = n;
        option.textContent = `#${n}`;
        select.append(option);
      }
      if (numbers.includes(previous)) select.value = previous;
    }
    if (numbers.length > 0) {
      this.diffFrom.value = numbers[Math.max(0, numbers.length - 2)] ?? "1";
      this.diffTo.value = numbers[numbers.length - 1] ?? "1";
    }
  }

  async selectRevision(n: number): Promise<void> {
    if (this.profile === null) return;
    const detail = await this.client.getRevision(this.profile.id, n);
    this.revisionPrompt.textContent = detail.rendered_prompt;
  }

  async showSelectedDiff(): Promise<void> {
    if (this.profile === null) return;
    const from = Number(this.diffFrom.value);
    const to = Number(this.diffTo.value);
    if (!from || !to) return;
    const result = await this.client.diffRevisions(this.profile.id, from, to);
    this.renderDiff(result.diff);
  }

  /** Render a line diff with added/removed lines highlighted. */
  private renderDiff(diff: string): void {
    clear(this.diffView);
    if (!diff) {
      this.diffView.append(el("div", "diff-empty", "no differences"));
      return;
    }
    for (const line of diff.split("\n")) {
      if (line.startsWith("@@")) {
        this.diffView.append(el("div", "diff-hunk", line));
      } else if (line.startsWith("+")) {
        this.diffView.append(el("div", "diff-line diff-add", line));
      } else if (line.startsWith("-")) {
        this.diffView.append(el("div", "diff-line diff-del", line));
      } else {
        this.diffView.append(el("div", "diff-line", line));
      }
    }
  }
}
