import { afterEach, describe, expect, it } from "vitest";

import type { RatingApp } from "../src/app.js";
import { bootstrap, STORAGE_KEY } from "../src/boot.js";
import { pendingNext, SAMPLE_ONE, ScriptedBackend } from "./helpers.js";

const apps: RatingApp[] = [];

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

afterEach(() => {
  while (apps.length) apps.pop()?.destroy();
  document.body.replaceChildren();
  window.localStorage.clear();
});

describe("bootstrap", () => {
  it("renders the join form when no session is known", () => {
    const root = mount();
    const app = bootstrap(root, {
      api: new ScriptedBackend(),
      search: "",
      storage: window.localStorage,
    });
    expect(app).toBeNull();
    expect(root.querySelector("form.join")).not.toBeNull();
    expect(root.querySelector("input.join-session")).not.toBeNull();
    expect(root.querySelector("input.join-rater")).not.toBeNull();
  });

  it("joining a session persists the identity and starts the app", async () => {
    const backend = new ScriptedBackend();
    backend.nextQueue = [pendingNext(SAMPLE_ONE)];
    const root = mount();
    bootstrap(root, {
      api: backend,
      search: "",
      storage: window.localStorage,
      onStart: (app) => apps.push(app),
    });

    const session = root.querySelector<HTMLInputElement>("input.join-session");
    const rater = root.querySelector<HTMLInputElement>("input.join-rater");
    const form = root.querySelector<HTMLFormElement>("form.join");
    session!.value = "s777";
    rater!.value = "ben";
    form!.dispatchEvent(
      new Event("submit", { bubbles: true, cancelable: true }),
    );

    expect(apps).toHaveLength(1);
    await apps[0].idle();
    expect(JSON.parse(window.localStorage.getItem(STORAGE_KEY)!)).toEqual({
      sessionId: "s777",
      rater: "ben",
    });
    expect(root.textContent).toContain(SAMPLE_ONE.adapted_sentences[0]);
  });

  it("reads the session from URL parameters", async () => {
    const backend = new ScriptedBackend();
    backend.nextQueue = [pendingNext(SAMPLE_ONE)];
    const root = mount();
    const app = bootstrap(root, {
      api: backend,
      search: "?session=s42&rater=cam",
      storage: window.localStorage,
      onStart: (started) => apps.push(started),
    });

    expect(app).not.toBeNull();
    await app!.idle();
    expect(root.querySelector("form.join")).toBeNull();
    expect(root.textContent).toContain(SAMPLE_ONE.source_sentences[0]);
    expect(JSON.parse(window.localStorage.getItem(STORAGE_KEY)!)).toEqual({
      sessionId: "s42",
      rater: "cam",
    });
  });

  it("resumes from stored identity on reload", async () => {
    const backend = new ScriptedBackend();
    backend.nextQueue = [pendingNext(SAMPLE_ONE)];
    window.localStorage.setItem(
      STORAGE_KEY,
      JSON.stringify({ sessionId: "s9", rater: "dee" }),
    );
    const root = mount();
    const app = bootstrap(root, {
      api: backend,
      search: "",
      storage: window.localStorage,
      onStart: (started) => apps.push(started),
    });

    expect(app).not.toBeNull();
    await app!.idle();
    expect(root.textContent).toContain(SAMPLE_ONE.adapted_sentences[0]);
  });

  it("falls back to the join form on corrupted storage", () => {
    window.localStorage.setItem(STORAGE_KEY, "{not json");
    const root = mount();
    const app = bootstrap(root, {
      api: new ScriptedBackend(),
      search: "",
      storage: window.localStorage,
    });
    expect(app).toBeNull();
    expect(root.querySelector("form.join")).not.toBeNull();
  });
});
