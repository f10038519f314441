/** Page bootstrap: resolve the session id and rater name, then hand the
 * root element to RatingApp.
 *
 * Only the session identity (session id + rater name) is persisted, so a
 * reload rejoins the same session and the server decides which sample comes
 * next. Ratings themselves are never stored client-side.
 */

import { RatingApi, type RatingBackend } from "./api.js";
import { RatingApp } from "./app.js";

export const STORAGE_KEY = "plainbench.rating.session";

export interface BootOptions {
  api?: RatingBackend;
  search?: string;
  storage?: Storage;
  /** Called with the app once a session is joined (used by tests). */
  onStart?: (app: RatingApp) => void;
}

interface StoredSession {
  sessionId: string;
  rater: string;
}

function fromQuery(search: string): StoredSession | null {
  const params = new URLSearchParams(search);
  const sessionId = params.get("session");
  const rater = params.get("rater");
  return sessionId && rater ? { sessionId, rater } : null;
}

function fromStorage(storage: Storage): StoredSession | null {
  try {
    const raw = storage.getItem(STORAGE_KEY);
    if (!raw) return null;
    const parsed = JSON.parse(raw) as Partial<StoredSession>;
    return parsed.sessionId && parsed.rater
      ? { sessionId: parsed.sessionId, rater: parsed.rater }
      : null;
  } catch {
    return null;
  }
}

function startApp(
  root: HTMLElement,
  api: RatingBackend,
  storage: Storage,
  handle: StoredSession,
  onStart?: (app: RatingApp) => void,
): RatingApp {
  storage.setItem(STORAGE_KEY, JSON.stringify(handle));
  const app = new RatingApp(root, api, handle);
  onStart?.(app);
  void app.start();
  return app;
}

function renderJoinForm(
  root: HTMLElement,
  onJoin: (handle: StoredSession) => void,
): void {
  root.replaceChildren();
  const form = document.createElement("form");
  form.className = "join";

  const title = document.createElement("h2");
  title.textContent = "Join a rating session";
  form.appendChild(title);

  const sessionInput = document.createElement("input");
  sessionInput.className = "join-session";
  sessionInput.name = "session";
  sessionInput.placeholder = "Session id";
  sessionInput.required = true;

  const raterInput = document.createElement("input");
  raterInput.className = "join-rater";
  raterInput.name = "rater";
  raterInput.placeholder = "Your rater name";
  raterInput.required = true;

  const button = document.createElement("button");
  button.type = "submit";
  button.className = "join-start";
  button.textContent = "Start rating";

  form.append(sessionInput, raterInput, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const sessionId = sessionInput.value.trim();
    const rater = raterInput.value.trim();
    if (sessionId && rater) onJoin({ sessionId, rater });
  });
  root.appendChild(form);
}

/** Mount the UI; returns the app when a session is already known. */
export function bootstrap(
  root: HTMLElement,
  options: BootOptions = {},
): RatingApp | null {
  const api = options.api ?? new RatingApi("");
  const search = options.search ?? window.location.search;
  const storage = options.storage ?? window.localStorage;
  const handle = fromQuery(search) ?? fromStorage(storage);
  if (handle) {
    return startApp(root, api, storage, handle, options.onStart);
  }
  renderJoinForm(root, (joined) =>
    startApp(root, api, storage, joined, options.onStart),
  );
  return null;
}
