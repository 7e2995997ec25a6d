/**
 * Browser entry point. Mounts the studio against the service that serves
 * the page (or ?api=<base-url> for a service running elsewhere) and opens
 * the session named by ?session=… when given.
 */

import { ApiClient } from "./api.js";
import { StudioApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.location.origin;

const client = new ApiClient(baseUrl);
const app = new StudioApp(client);

const host = document.getElementById("app");
if (!host) throw new Error("missing #app mount point");
host.append(app.root);

const sessionId = params.get("session");
if (sessionId) {
  void app.open(sessionId).then(() => app.chat.startPolling());
} else {
  void app.showSessionPicker();
}
