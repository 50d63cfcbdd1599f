import { ApiError } from "./api";

/** Dismissible error banners carrying the service's {code, message}. */
export function showErrorBanner(container: HTMLElement, error: unknown): void {
  const banner = document.createElement("div");
  banner.className = "banner error";
  const text = document.createElement("span");
  if (error instanceof ApiError) {
    text.textContent = `[${error.code}] ${error.message}`;
  } else {
    text.textContent = String(error instanceof Error ? error.message : error);
  }
  const dismiss = document.createElement("button");
  dismiss.className = "dismiss";
  dismiss.textContent = "×";
  dismiss.addEventListener("click", () => banner.remove());
  banner.appendChild(text);
  banner.appendChild(dismiss);
  container.appendChild(banner);
}
