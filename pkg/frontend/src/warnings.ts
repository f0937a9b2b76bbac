// Inline threshold/rejection badges for the selection workflow.

export function renderWarnings(container: HTMLElement, warnings: string[]): void {
  container.replaceChildren();
  for (const warning of warnings) {
    const badge = document.createElement("span");
    badge.className = "warning-badge";
    badge.textContent = warning;
    container.appendChild(badge);
  }
}
