// Browser entry point: reads the daemon URL from the page and starts the app.

import { startConsole, type ConsoleApp } from "./main.js";

let app: ConsoleApp | null = null;

function boot(): void {
  const urlInput = document.getElementById("url-input") as HTMLInputElement;
  const connectButton = document.getElementById("connect-btn")!;
  const start = () => {
    app?.dispose();
    app = startConsole(document, urlInput.value);
  };
  connectButton.addEventListener("click", start);
  start();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
