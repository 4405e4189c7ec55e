import { ApiClient } from "./api.js";
import { ReviewApp } from "./view.js";

function sessionFromUrl(): string | null {
  return new URLSearchParams(window.location.search).get("session");
}

function renderSessionForm(root: HTMLElement): void {
  const form = document.createElement("form");
  form.className = "session-form";
  const label = document.createElement("label");
  label.textContent = "Session id: ";
  const input = document.createElement("input");
  input.name = "session";
  label.appendChild(input);
  const go = document.createElement("button");
  go.textContent = "Open";
  form.append(label, go);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (input.value.trim()) {
      window.location.search = `?session=${encodeURIComponent(input.value.trim())}`;
    }
  });
  root.appendChild(form);
}

export function boot(root: HTMLElement): void {
  const sessionId = sessionFromUrl();
  if (!sessionId) {
    renderSessionForm(root);
    return;
  }
  const app = new ReviewApp(root, new ApiClient(""), sessionId);
  void app.start();
}

const mount = document.getElementById("app");
if (mount) {
  boot(mount);
}
