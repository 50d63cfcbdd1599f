import { ApiClient } from "./api";
import { showErrorBanner } from "./banners";
import { renderHeatmap, renderLegend, referenceSummary } from "./heatmap";
import type {
  ExplanationJson,
  FeatureJson,
  QueryResponseJson,
  StoredExplanation,
} from "./types";

interface PaneState {
  busy: boolean;
  stored: StoredExplanation | null;
  lastSignature: string | null;
}

const SKELETON = `
  <header>
    <h1>ragx</h1>
    <div class="selectors">
      <label>embedder
        <select id="embedder-select"></select>
      </label>
      <label>generator
        <select id="generator-select"></select>
      </label>
      <label>target pane
        <select id="pane-select">
          <option value="0">left</option>
          <option value="1">right</option>
        </select>
      </label>
    </div>
  </header>
  <div id="banners"></div>
  <section class="ask">
    <input id="question" type="text" placeholder="ask a question" />
    <button id="ask">ask</button>
  </section>
  <section id="answer" class="answer" hidden>
    <div id="results"></div>
    <div class="response-box">
      <div id="response"></div>
      <button id="explain-generation">explain generation</button>
    </div>
  </section>
  <section class="compare">
    <div class="pane" id="pane-0">
      <div class="pane-header"></div>
      <div class="pane-reference"></div>
      <div class="pane-heatmap"></div>
      <div class="pane-legend"></div>
      <pre class="pane-whatif" hidden></pre>
    </div>
    <div class="pane" id="pane-1">
      <div class="pane-header"></div>
      <div class="pane-reference"></div>
      <div class="pane-heatmap"></div>
      <div class="pane-legend"></div>
      <pre class="pane-whatif" hidden></pre>
    </div>
  </section>
`;

const EMBEDDER_IDS = ["lexical", "http"];
const GENERATOR_IDS = ["extractive", "constant", "http"];

export class App {
  readonly panes: [PaneState, PaneState] = [
    { busy: false, stored: null, lastSignature: null },
    { busy: false, stored: null, lastSignature: null },
  ];
  lastQuery: QueryResponseJson | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {}

  async init(): Promise<void> {
    this.root.innerHTML = SKELETON;
    this.el("#ask").addEventListener("click", () => void this.ask());
    this.el("#question").addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") void this.ask();
    });
    this.el("#explain-generation").addEventListener("click", () =>
      void this.explainGeneration(),
    );
    await this.loadBackends();
  }

  el(selector: string): HTMLElement {
    const found = this.root.querySelector(selector);
    if (!found) throw new Error(`missing element ${selector}`);
    return found as HTMLElement;
  }

  private select(selector: string): HTMLSelectElement {
    return this.el(selector) as HTMLSelectElement;
  }

  activePane(): number {
    return Number(this.select("#pane-select").value) || 0;
  }

  /** Current backend selection, sent along with every request. */
  backendSelection(): Record<string, string> {
    return {
      embedder: this.select("#embedder-select").value,
      generator: this.select("#generator-select").value,
    };
  }

  async loadBackends(): Promise<void> {
    try {
      const config = (await this.client.config()) as {
        embedder?: { id?: string };
        generator?: { id?: string };
      };
      const health = await this.client.health();
      const reachable = new Map(
        health.backends.map((b) => [b.kind, b.reachable !== false]),
      );
      this.fillSelector(
        this.select("#embedder-select"),
        EMBEDDER_IDS,
        config.embedder?.id ?? "lexical",
        reachable.get("embedder") ?? true,
      );
      this.fillSelector(
        this.select("#generator-select"),
        GENERATOR_IDS,
        config.generator?.id ?? "extractive",
        reachable.get("generator") ?? true,
      );
    } catch (error) {
      showErrorBanner(this.el("#banners"), error);
    }
  }

  private fillSelector(
    select: HTMLSelectElement,
    ids: string[],
    configured: string,
    configuredReachable: boolean,
  ): void {
    select.textContent = "";
    for (const id of ids.includes(configured) ? ids : [configured, ...ids]) {
      const option = document.createElement("option");
      option.value = id;
      // the health probe covers the configured backend; mark it when degraded
      const degraded = id === configured && !configuredReachable;
      option.textContent = degraded ? `${id} (unreachable)` : id;
      if (degraded) option.classList.add("degraded");
      select.appendChild(option);
    }
    select.value = configured;
  }

  async ask(): Promise<void> {
    const question = (this.el("#question") as HTMLInputElement).value.trim();
    if (!question) return;
    try {
      const result = await this.client.query({
        question,
        ...this.backendSelection(),
      });
      this.lastQuery = result;
      this.renderQuery(result);
    } catch (error) {
      showErrorBanner(this.el("#banners"), error);
    }
  }

  private renderQuery(result: QueryResponseJson): void {
    this.el("#answer").hidden = false;
    const results = this.el("#results");
    results.textContent = "";
    for (const doc of result.retrieved) {
      const row = document.createElement("div");
      row.className = "doc-row";
      const label = document.createElement("span");
      label.className = "doc-label";
      label.textContent = `${doc.id}  score=${doc.score}`;
      const text = document.createElement("span");
      text.className = "doc-text";
      text.textContent = doc.text;
      const button = document.createElement("button");
      button.textContent = "explain retrieval";
      button.addEventListener("click", () =>
        void this.explainRetrieval(result.question.text, doc.id),
      );
      row.append(label, text, button);
      results.appendChild(row);
    }
    this.el("#response").textContent = `response: ${result.response.text}`;
  }

  async explainRetrieval(question: string, documentId: string): Promise<void> {
    const body = {
      question,
      document_id: documentId,
      ...this.backendSelection(),
    };
    await this.runExplanation("retrieval", body, (b) =>
      this.client.explainRetrieval(b),
    );
  }

  async explainGeneration(): Promise<void> {
    if (!this.lastQuery) return;
    const body = {
      question: this.lastQuery.question.text,
      ...this.backendSelection(),
    };
    await this.runExplanation("generation", body, (b) =>
      this.client.explainGeneration(b),
    );
  }

  private async runExplanation(
    kind: string,
    body: Record<string, unknown>,
    call: (body: Record<string, unknown>) => Promise<StoredExplanation>,
  ): Promise<void> {
    const paneIndex = this.activePane();
    const pane = this.panes[paneIndex];
    if (pane.busy) return; // at most one in-flight request per pane
    const signature = `${kind}:${JSON.stringify(body)}`;
    if (pane.lastSignature === signature && pane.stored) {
      return; // identical request: the stored content-digest id still applies
    }
    pane.busy = true;
    try {
      const stored = await call(body);
      pane.stored = stored;
      pane.lastSignature = signature;
      this.renderPane(paneIndex);
    } catch (error) {
      showErrorBanner(this.el("#banners"), error);
    } finally {
      pane.busy = false;
    }
  }

  renderPane(paneIndex: number): void {
    const pane = this.panes[paneIndex];
    if (!pane.stored) return;
    const { explanation } = pane.stored;
    const paneEl = this.el(`#pane-${paneIndex}`);
    const header = paneEl.querySelector(".pane-header") as HTMLElement;
    header.textContent =
      `${explanation.target} | backend ${explanation.backend.backend_id}` +
      (explanation.warnings.length ? ` | warnings: ${explanation.warnings.join(",")}` : "");
    (paneEl.querySelector(".pane-reference") as HTMLElement).textContent =
      referenceSummary(explanation);
    renderHeatmap(
      paneEl.querySelector(".pane-heatmap") as HTMLElement,
      explanation,
      {
        markGapsProtected: explanation.target === "generation",
        onFeatureClick: (feature) => void this.showWhatIf(paneIndex, feature),
      },
    );
    renderLegend(paneEl.querySelector(".pane-legend") as HTMLElement);
    const whatIf = paneEl.querySelector(".pane-whatif") as HTMLElement;
    whatIf.hidden = true;
    whatIf.textContent = "";
  }

  async showWhatIf(paneIndex: number, feature: FeatureJson): Promise<void> {
    const pane = this.panes[paneIndex];
    if (!pane.stored) return;
    const whatIf = this.el(`#pane-${paneIndex}`).querySelector(
      ".pane-whatif",
    ) as HTMLElement;
    try {
      // shown verbatim: the exact payload bytes the service returned
      const payload = await this.client.perturbation(pane.stored.id, feature.index);
      whatIf.textContent = payload;
      whatIf.hidden = false;
    } catch (error) {
      showErrorBanner(this.el("#banners"), error);
    }
  }

  paneExplanation(paneIndex: number): ExplanationJson | null {
    return this.panes[paneIndex].stored?.explanation ?? null;
  }
}
