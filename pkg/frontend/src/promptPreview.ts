/**
 * Client-side rendering of the would-be system prompt, so the configuration
 * channel can preview an edit before saving it.
 *
 * This mirrors the service's template (version "a1-reconstruction-1")
 * byte-for-byte; the parity tests compare it against rendered prompts
 * recorded from the real service, so any drift fails the suite. Used only
 * for the pre-save preview pane — saved revisions always display the
 * prompt the service itself rendered.
 */

import type { ActionSpec } from "./api.js";

export const TEMPLATE_VERSION = "a1-reconstruction-1";

export interface ProfileFields {
  name: string;
  pronoun: string;
  backstory: string;
  traits: string;
  dialogue_style: string;
  dialogue_samples: string[];
  scenario: string;
  speaker_context: string;
  actions: ActionSpec[];
}

const ACTION_LIST_HEADER =
  "Action list:\n" +
  "When you receive a message, you have the following actions to choose from, never change these option name:";

const DIRECTIVE_HEADER =
  "Always use following format in reply!! Never skip. Never change the parameter name before colon, never add more content, never skip! Include all followings:";

const RESULT_CUE = "<Result reply>:";

export function renderFormatDirective(
  name: string,
  actions: ActionSpec[],
): string {
  const actionNames = actions.map((a) => a.name).join(" / ");
  return [
    DIRECTIVE_HEADER,
    `Observe: What does ${name} observe?`,
    `Reflect: Based on the observation, what does ${name} feel like?`,
    `User impression: What is ${name}'s impression of <Artist>?`,
    `Behavior: Describe the body movements and expressions of ${name}`,
    `Action: [Action name from the previous list. Choose one of: ${actionNames}. Don't change name. Always choose one only! Never skip.]`,
    `${name}: [Always your reply here. You are not an AI assistant. You are ${name}. Be creative and imaginative and match ${name}'s story and background. Never skip.]`,
  ].join("\n");
}

/** The full prompt for an empty dialogue window, as a stored revision renders it. */
export function buildPromptPreview(state: ProfileFields): string {
  const persona = `From now on, you are ${state.name}.`;

  const backstoryParts = [state.backstory.trim()];
  if (state.pronoun.trim()) {
    backstoryParts.push(`Your pronoun is "${state.pronoun.trim()}".`);
  }
  const backstory = backstoryParts.filter((part) => part).join(" ");

  const actionList = [
    ACTION_LIST_HEADER,
    ...state.actions.map((a) => `${a.name}: ${a.description}`),
  ].join("\n");

  const directive = renderFormatDirective(state.name, state.actions);

  const traitsAndStyle = [
    state.traits.trim(),
    state.dialogue_style.trim(),
    ...state.dialogue_samples.map((sample) => sample.trim()),
  ]
    .filter((part) => part)
    .join("\n");

  const scenarioAndSpeaker = [
    state.scenario.trim(),
    state.speaker_context.trim(),
  ]
    .filter((part) => part)
    .join("\n");

  const chatWindow = "current chat:";

  const sections = [
    persona,
    backstory,
    actionList,
    directive,
    traitsAndStyle,
    scenarioAndSpeaker,
    chatWindow,
  ];
  return sections.join("\n\n") + "\n" + RESULT_CUE;
}
