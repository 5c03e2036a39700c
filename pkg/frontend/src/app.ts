/** Console shell: wires the API client, map renderer, draft flow, and
 * report panel into a DOM root. All state lives in plain objects; every
 * interaction mutates state and re-renders from it.
 */

import { ApiClient, ApiError } from "./api.js";
import { SegmentDraft, type ContractForm } from "./draft.js";
import { fromSearchParams, toSearchParams, type ViewState } from "./filters.js";
import { fromScreen, type Viewport } from "./mercator.js";
import { renderMap, type MapData } from "./mapview.js";
import { ReportPanel } from "./panel.js";
import { clusterPopupHtml, escapeHtml } from "./popup.js";
import type { SegmentDetail, SegmentProperties } from "./types.js";

export interface ConsoleConfig {
  apiBase: string;
  tileTemplate: string;
  width?: number;
  height?: number;
  fetchFn?: typeof fetch;
  /** Called with the canonical query string after any state change. */
  onUrlChange?: (search: string) => void;
}

const CONTRACT_FIELDS: Array<{ name: keyof ContractForm; label: string; type: string }> = [
  { name: "contractor_name", label: "Contractor name", type: "text" },
  { name: "contractor_contact", label: "Contractor contact", type: "text" },
  { name: "construction_date", label: "Construction date", type: "date" },
  { name: "budget", label: "Budget", type: "text" },
  { name: "warranty_end", label: "Warranty end", type: "date" },
  { name: "category", label: "Category", type: "text" },
];

export class ConsoleApp {
  readonly api: ApiClient;
  view: ViewState;
  data: MapData = { potholes: [], segments: [] };
  draft: SegmentDraft | null = null;
  readonly panel: ReportPanel;
  /** Private segment JSON from authenticated mutations, keyed by id. */
  readonly privateSegments = new Map<number, SegmentDetail>();
  statusLine = "";

  private readonly width: number;
  private readonly height: number;
  private dragging: "start" | "end" | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly config: ConsoleConfig,
  ) {
    this.api = new ApiClient(config.apiBase, config.fetchFn ?? fetch.bind(globalThis));
    this.width = config.width ?? 800;
    this.height = config.height ?? 600;
    this.view = fromSearchParams(new URLSearchParams());
    this.panel = new ReportPanel(this.api, () => {
      this.statusLine = "sign in to send notifications";
      this.renderChrome();
    });
    this.root.innerHTML =
      `<div class="toolbar" data-role="toolbar"></div>` +
      `<div class="map" data-role="map"></div>` +
      `<div class="popup" data-role="popup" hidden></div>` +
      `<div class="draft-form" data-role="draft-form" hidden></div>` +
      `<div class="report" data-role="panel"></div>`;
    this.bindMapEvents();
  }

  private get viewport(): Viewport {
    return {
      center: this.view.center,
      zoom: this.view.zoom,
      width: this.width,
      height: this.height,
    };
  }

  private slot(role: string): HTMLElement {
    const el = this.root.querySelector<HTMLElement>(`[data-role="${role}"]`);
    if (!el) throw new Error(`missing slot ${role}`);
    return el;
  }

  async boot(search: string): Promise<void> {
    this.view = fromSearchParams(new URLSearchParams(search));
    await this.refresh();
  }

  /** Re-fetch map data for the current filters and repaint everything. */
  async refresh(): Promise<void> {
    const [potholes, segments] = await Promise.all([
      this.view.layers.potholes
        ? this.api.potholes(this.view.filters)
        : Promise.resolve({ type: "FeatureCollection" as const, features: [] }),
      this.view.layers.segments
        ? this.api.segments(this.view.filters.category)
        : Promise.resolve({ type: "FeatureCollection" as const, features: [] }),
    ]);
    this.data = { potholes: potholes.features, segments: segments.features };
    this.render();
    this.config.onUrlChange?.(toSearchParams(this.view).toString());
  }

  render(): void {
    this.renderMapPane();
    this.renderChrome();
  }

  private renderMapPane(): void {
    const overlay = this.draft
      ? { start: this.draft.start, end: this.draft.end, preview: this.draft.preview }
      : undefined;
    const rendered = renderMap(this.viewport, this.data, this.config.tileTemplate, overlay);
    this.slot("map").innerHTML = rendered.svg;
  }

  private renderChrome(): void {
    this.renderToolbar();
    this.renderDraftForm();
    this.slot("panel").innerHTML = this.panel.report
      ? this.panel.html() +
        `<button data-role="notify">Notify contractor</button>`
      : this.panel.html();
    this.slot("panel")
      .querySelector(`[data-role="notify"]`)
      ?.addEventListener("click", () => void this.onNotify());
  }

  private renderToolbar(): void {
    const f = this.view.filters;
    const signedIn = this.api.authenticated;
    const toolbar = this.slot("toolbar");
    toolbar.innerHTML =
      (signedIn
        ? `<span class="whoami">signed in</span>` +
          `<form data-role="upload">` +
          `<input type="file" name="detections"><input type="file" name="gps">` +
          `<button type="submit">Upload batch</button></form>`
        : `<form data-role="login">` +
          `<input name="username" placeholder="username">` +
          `<input name="password" type="password" placeholder="password">` +
          `<button type="submit">Sign in</button></form>`) +
      `<label>Status <select data-role="status">` +
      ["active", "repaired", "all"]
        .map((s) => `<option value="${s}"${s === f.status ? " selected" : ""}>${s}</option>`)
        .join("") +
      `</select></label>` +
      `<label>From <input data-role="from" value="${escapeHtml(f.from ?? "")}"></label>` +
      `<label>To <input data-role="to" value="${escapeHtml(f.to ?? "")}"></label>` +
      `<label><input type="checkbox" data-role="layer-potholes"${
        this.view.layers.potholes ? " checked" : ""
      }> potholes</label>` +
      `<label><input type="checkbox" data-role="layer-segments"${
        this.view.layers.segments ? " checked" : ""
      }> segments</label>` +
      `<button data-role="draw">${this.draft ? "Cancel drawing" : "Draw segment"}</button>` +
      `<span class="status-line">${escapeHtml(this.statusLine)}</span>`;

    toolbar
      .querySelector<HTMLFormElement>(`form[data-role="login"]`)
      ?.addEventListener("submit", (e) => {
        e.preventDefault();
        void this.onLogin(e.target as HTMLFormElement);
      });
    toolbar
      .querySelector<HTMLFormElement>(`form[data-role="upload"]`)
      ?.addEventListener("submit", (e) => {
        e.preventDefault();
        void this.onUpload(e.target as HTMLFormElement);
      });
    toolbar
      .querySelector<HTMLSelectElement>(`select[data-role="status"]`)
      ?.addEventListener("change", (e) => {
        const value = (e.target as HTMLSelectElement).value;
        this.view.filters.status = value as ViewState["filters"]["status"];
        void this.refresh();
      });
    for (const key of ["from", "to"] as const) {
      toolbar
        .querySelector<HTMLInputElement>(`input[data-role="${key}"]`)
        ?.addEventListener("change", (e) => {
          const value = (e.target as HTMLInputElement).value.trim();
          if (value) this.view.filters[key] = value;
          else delete this.view.filters[key];
          void this.refresh();
        });
    }
    for (const layer of ["potholes", "segments"] as const) {
      toolbar
        .querySelector<HTMLInputElement>(`input[data-role="layer-${layer}"]`)
        ?.addEventListener("change", (e) => {
          this.view.layers[layer] = (e.target as HTMLInputElement).checked;
          void this.refresh();
        });
    }
    toolbar.querySelector(`button[data-role="draw"]`)?.addEventListener("click", () => {
      this.draft = this.draft ? null : new SegmentDraft();
      this.render();
    });
  }

  private renderDraftForm(): void {
    const host = this.slot("draft-form");
    if (!this.draft) {
      host.hidden = true;
      host.innerHTML = "";
      return;
    }
    const draft = this.draft;
    host.hidden = false;
    const errors = draft.fieldErrors();
    const fields = CONTRACT_FIELDS.map(({ name, label, type }) => {
      const error = errors[name]
        ? `<span class="field-error" data-error-for="${name}">${escapeHtml(errors[name]!)}</span>`
        : "";
      return (
        `<label>${label} <input name="${name}" type="${type}"` +
        ` value="${escapeHtml(draft.contract[name])}">${error}</label>`
      );
    }).join("");
    const hint =
      draft.start === null
        ? "click the map to set the start point"
        : draft.end === null
          ? "click the map to set the end point"
          : "drag a handle to adjust";
    const noRoute = draft.fallbackOffered
      ? `<div class="noroute">${escapeHtml(draft.noRouteMessage ?? "no route found")}` +
        ` <button type="button" data-role="fallback">Use straight line</button></div>`
      : "";
    host.innerHTML =
      `<form data-role="draft">` +
      `<div class="draft-hint">${hint}</div>` +
      `<label>Mode <select name="mode">` +
      `<option value="routed"${draft.mode === "routed" ? " selected" : ""}>routed</option>` +
      `<option value="straight"${draft.mode === "straight" ? " selected" : ""}>straight</option>` +
      `</select></label>` +
      fields +
      noRoute +
      `<button type="submit" data-role="submit-segment"${draft.canSubmit ? "" : " disabled"}>` +
      `Create segment</button></form>`;

    const form = host.querySelector<HTMLFormElement>(`form[data-role="draft"]`)!;
    form.querySelector<HTMLSelectElement>(`select[name="mode"]`)!.addEventListener(
      "change",
      (e) => {
        draft.mode = (e.target as HTMLSelectElement).value as "routed" | "straight";
      },
    );
    for (const { name } of CONTRACT_FIELDS) {
      form.querySelector<HTMLInputElement>(`input[name="${name}"]`)!.addEventListener(
        "input",
        (e) => {
          draft.setField(name, (e.target as HTMLInputElement).value);
          const submit = form.querySelector<HTMLButtonElement>(
            `[data-role="submit-segment"]`,
          )!;
          submit.disabled = !draft.canSubmit;
        },
      );
    }
    form.addEventListener("submit", (e) => {
      e.preventDefault();
      void this.onSubmitDraft(false);
    });
    form.querySelector(`[data-role="fallback"]`)?.addEventListener("click", () => {
      void this.onSubmitDraft(true);
    });
  }

  private bindMapEvents(): void {
    const map = this.slot("map");
    map.addEventListener("click", (e) => void this.onMapClick(e as MouseEvent));
    map.addEventListener("mousedown", (e) => {
      const handle = (e.target as Element).closest?.(".draft-handle");
      if (handle && this.draft) {
        this.dragging = handle.getAttribute("data-endpoint") as "start" | "end";
      }
    });
    map.addEventListener("mousemove", (e) => {
      if (this.dragging && this.draft) {
        this.draft.dragEndpoint(this.dragging, this.eventLatLng(e as MouseEvent));
        this.renderMapPane();
      }
    });
    map.addEventListener("mouseup", () => {
      if (this.dragging) {
        this.dragging = null;
        this.renderDraftForm();
      }
    });
  }

  private eventLatLng(e: MouseEvent): { lat: number; lon: number } {
    const rect = this.slot("map").getBoundingClientRect();
    return fromScreen(e.clientX - rect.left, e.clientY - rect.top, this.viewport);
  }

  private async onMapClick(e: MouseEvent): Promise<void> {
    const target = e.target as Element;
    const marker = target.closest?.(".marker");
    if (marker && !this.draft) {
      this.openPopup(marker.getAttribute("data-feature-ids") ?? "");
      return;
    }
    const segment = target.closest?.(".segment");
    if (segment && !this.draft) {
      const id = Number((segment.getAttribute("data-segment-id") ?? "").replace("segment:", ""));
      await this.openPanel(id);
      return;
    }
    if (this.draft) {
      this.draft.handleMapClick(this.eventLatLng(e));
      this.renderMapPane();
      this.renderDraftForm();
    }
  }

  private openPopup(featureIds: string): void {
    const wanted = new Set(featureIds.split(",").filter(Boolean));
    const members = this.data.potholes.filter((f) => wanted.has(f.id));
    const bySegmentId = (segmentId: number | null): SegmentProperties | undefined =>
      this.data.segments.find((s) => s.id === `segment:${segmentId}`)?.properties;
    const popup = this.slot("popup");
    popup.innerHTML = clusterPopupHtml(members, bySegmentId);
    popup.hidden = false;
  }

  async openPanel(segmentId: number): Promise<void> {
    const contact = this.privateSegments.get(segmentId)?.contract.contractor_contact ?? null;
    await this.panel.load(segmentId, this.api.authenticated ? contact : null);
    this.renderChrome();
  }

  private async onLogin(form: HTMLFormElement): Promise<void> {
    const username = form.querySelector<HTMLInputElement>(`[name="username"]`)!.value;
    const password = form.querySelector<HTMLInputElement>(`[name="password"]`)!.value;
    try {
      await this.api.login(username, password);
      this.statusLine = "";
    } catch (err) {
      this.statusLine = err instanceof ApiError ? "sign-in failed" : String(err);
    }
    this.renderChrome();
  }

  private async onUpload(form: HTMLFormElement): Promise<void> {
    const pick = (name: string) =>
      form.querySelector<HTMLInputElement>(`input[name="${name}"]`)!.files?.[0];
    const detections = pick("detections");
    const gps = pick("gps");
    if (!detections || !gps) {
      this.statusLine = "select both files";
      this.renderChrome();
      return;
    }
    try {
      const out = await this.api.ingest(detections, gps);
      this.statusLine = `batch ${out.batch_id} ingested`;
      await this.refresh();
    } catch (err) {
      this.statusLine = err instanceof ApiError ? err.message : String(err);
      this.renderChrome();
    }
  }

  private async onSubmitDraft(useFallback: boolean): Promise<void> {
    if (!this.draft) return;
    let created: SegmentDetail | null;
    try {
      created = useFallback
        ? await this.draft.submitWithStraightFallback(this.api)
        : await this.draft.submit(this.api);
    } catch (err) {
      this.statusLine = err instanceof ApiError ? err.message : String(err);
      this.renderChrome();
      return;
    }
    if (created === null) {
      // NoRoute: keep the draft alive and show the fallback offer.
      this.renderDraftForm();
      return;
    }
    this.privateSegments.set(created.id, created);
    this.draft = null;
    this.statusLine = `segment ${created.id} created`;
    await this.refresh();
  }

  private async onNotify(): Promise<void> {
    await this.panel.notify();
    this.renderChrome();
  }
}
