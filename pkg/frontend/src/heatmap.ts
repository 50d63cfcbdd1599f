import { heatClass, heatColor } from "./colors";
import type { ExplanationJson, FeatureJson } from "./types";

export interface HeatmapOptions {
  /** Called when the user clicks a feature span. */
  onFeatureClick?: (feature: FeatureJson) => void;
  /** Style the gaps between features as protected template regions. */
  markGapsProtected?: boolean;
}

function featureTitle(feature: FeatureJson): string {
  const outcome = feature.outcome;
  const whatIf =
    outcome.kind === "retrieval_score"
      ? `score=${outcome.score}`
      : `output=${(outcome.response_text ?? "").slice(0, 160)}`;
  return `weight=${feature.weight} raw_delta=${feature.raw_delta} ${whatIf}`;
}

/**
 * Render the explanation's source text with feature spans highlighted.
 * Weights are displayed verbatim (data-weight carries the exact payload
 * value); the color mapping is the shared monotone white-to-red scale.
 */
export function renderHeatmap(
  container: HTMLElement,
  explanation: ExplanationJson,
  options: HeatmapOptions = {},
): void {
  container.textContent = "";
  container.classList.add("heatmap");
  const source = explanation.source_text;
  let cursor = 0;
  for (const feature of explanation.features) {
    const [start, end] = feature.span;
    if (start > cursor) {
      container.appendChild(gapNode(source.slice(cursor, start), options));
    }
    const span = document.createElement("span");
    span.className = `feature ${heatClass(feature.weight)}`;
    span.style.backgroundColor = heatColor(feature.weight);
    span.textContent = source.slice(start, end);
    span.title = featureTitle(feature);
    span.dataset.index = String(feature.index);
    span.dataset.weight = String(feature.weight);
    if (options.onFeatureClick) {
      span.addEventListener("click", () => options.onFeatureClick?.(feature));
    }
    container.appendChild(span);
    cursor = end;
  }
  if (cursor < source.length) {
    container.appendChild(gapNode(source.slice(cursor), options));
  }
}

function gapNode(text: string, options: HeatmapOptions): Node {
  if (!options.markGapsProtected) {
    return document.createTextNode(text);
  }
  const span = document.createElement("span");
  span.className = "protected";
  span.title = "protected template region (not perturbed)";
  span.textContent = text;
  return span;
}

/** Color-scale legend matching the heatmap mapping. */
export function renderLegend(container: HTMLElement): void {
  container.textContent = "";
  container.classList.add("legend");
  const label = document.createElement("span");
  label.textContent = "weight: ";
  container.appendChild(label);
  for (const weight of [0, 0.25, 0.5, 0.75, 1]) {
    const chip = document.createElement("span");
    chip.className = `chip ${heatClass(weight)}`;
    chip.style.backgroundColor = heatColor(weight);
    chip.textContent = weight.toFixed(2);
    container.appendChild(chip);
  }
}

/** One-line summary of the reference the explanation was compared against. */
export function referenceSummary(explanation: ExplanationJson): string {
  if (explanation.target === "retrieval") {
    return `reference score s_d = ${explanation.reference.score}`;
  }
  return `reference response: ${explanation.reference.response}`;
}
