import { CandidateView } from "../api";
import { cellShade, clusterShade } from "../colors";
import { glyphSize, lassoSelect, Placed, placeCandidates, Point, voronoiCells } from "../geometry";
import { ViewModel } from "../viewmodel";

const WIDTH = 640;
const HEIGHT = 470;
const SVG_NS = "http://www.w3.org/2000/svg";

function candidateCarries(candidate: CandidateView, features: string[]): boolean {
  return features.every((f) => candidate.features.includes(f));
}

/** Scatter of output-shaped glyphs in Voronoi cells. Click selects one
 * candidate, shift-click its whole cluster, a lasso any subset. */
export class ActionSpace {
  private svg: SVGSVGElement;
  private tooltip: HTMLDivElement;
  private lassoPath: SVGPathElement;
  private lassoPoints: Point[] = [];
  private placed: Placed[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly vm: ViewModel,
  ) {
    this.svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.svg.setAttribute("class", "action-space");
    this.svg.setAttribute("data-testid", "action-space");
    this.root.appendChild(this.svg);

    this.tooltip = document.createElement("div");
    this.tooltip.className = "tooltip hidden";
    this.root.appendChild(this.tooltip);

    this.lassoPath = document.createElementNS(SVG_NS, "path") as SVGPathElement;
    this.lassoPath.setAttribute("class", "lasso");

    this.svg.addEventListener("pointerdown", (event) => this.lassoStart(event));
    this.svg.addEventListener("pointermove", (event) => this.lassoMove(event));
    this.svg.addEventListener("pointerup", () => this.lassoEnd());

    vm.onChange(() => this.render());
    this.render();
  }

  private toLocal(event: PointerEvent): Point {
    const rect = this.svg.getBoundingClientRect();
    const scaleX = rect.width > 0 ? WIDTH / rect.width : 1;
    const scaleY = rect.height > 0 ? HEIGHT / rect.height : 1;
    return { x: (event.clientX - rect.left) * scaleX, y: (event.clientY - rect.top) * scaleY };
  }

  private lassoStart(event: PointerEvent): void {
    if (event.target !== this.svg) return; // glyph clicks are selections
    this.lassoPoints = [this.toLocal(event)];
  }

  private lassoMove(event: PointerEvent): void {
    if (this.lassoPoints.length === 0) return;
    this.lassoPoints.push(this.toLocal(event));
    this.lassoPath.setAttribute(
      "d",
      `M${this.lassoPoints.map((p) => `${p.x},${p.y}`).join("L")}`,
    );
    if (!this.lassoPath.parentNode) this.svg.appendChild(this.lassoPath);
  }

  private lassoEnd(): void {
    const polygon = this.lassoPoints;
    this.lassoPoints = [];
    this.lassoPath.remove();
    if (polygon.length >= 3) this.completeLasso(polygon);
  }

  /** Select every glyph inside the polygon (exposed for scripted tests). */
  completeLasso(polygon: Point[]): void {
    const hits = lassoSelect(this.placed, polygon);
    if (hits.length > 0) {
      void this.vm.selectCandidates(hits.map((p) => p.candidate.id));
    }
  }

  render(): void {
    const view = this.vm.view;
    this.svg.replaceChildren();
    if (!view || view.candidates.length === 0) {
      const note = document.createElementNS(SVG_NS, "text");
      note.setAttribute("x", "20");
      note.setAttribute("y", "30");
      note.textContent = "no candidates";
      this.svg.appendChild(note);
      return;
    }
    this.placed = placeCandidates(view.candidates, WIDTH, HEIGHT);
    const cells = voronoiCells(this.placed, WIDTH, HEIGHT);
    const current = this.vm.currentVariable();
    const hoveredFeature = this.vm.hoveredFeature;

    this.placed.forEach((placed, index) => {
      const candidate = placed.candidate;
      const carries = current ? candidateCarries(candidate, current.features) : false;
      const family = carries ? "red" : "blue";

      const cell = document.createElementNS(SVG_NS, "path");
      cell.setAttribute("d", cells[index]);
      cell.setAttribute("fill", cellShade(family, candidate.cluster));
      cell.setAttribute("class", "cell");
      cell.setAttribute("data-cluster", String(candidate.cluster));
      cell.addEventListener("click", (event) => {
        if ((event as MouseEvent).shiftKey) this.selectCluster(candidate.cluster);
      });
      this.svg.appendChild(cell);

      const { width, height } = glyphSize(candidate.glyph.rows, candidate.glyph.cols);
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(placed.x - width / 2));
      rect.setAttribute("y", String(placed.y - height / 2));
      rect.setAttribute("width", String(width));
      rect.setAttribute("height", String(height));
      rect.setAttribute("fill", clusterShade(family, candidate.cluster));
      rect.setAttribute("data-candidate-id", String(candidate.id));
      rect.setAttribute("data-x", String(placed.x));
      rect.setAttribute("data-y", String(placed.y));
      const highlight =
        candidate.id === this.vm.hoveredCandidate ||
        (hoveredFeature !== null && candidate.features.includes(hoveredFeature));
      rect.setAttribute("class", `glyph${highlight ? " highlight" : ""}`);
      rect.addEventListener("click", (event) => {
        if ((event as MouseEvent).shiftKey) {
          this.selectCluster(candidate.cluster);
        } else {
          void this.vm.selectCandidates([candidate.id]);
        }
      });
      rect.addEventListener("pointerenter", () => this.showTooltip(placed));
      rect.addEventListener("pointerleave", () => this.hideTooltip());
      this.svg.appendChild(rect);
    });
  }

  private selectCluster(cluster: number): void {
    const view = this.vm.view;
    if (!view) return;
    const ids = view.candidates.filter((c) => c.cluster === cluster).map((c) => c.id);
    if (ids.length > 0) void this.vm.selectCandidates(ids);
  }

  private showTooltip(placed: Placed): void {
    const candidate = placed.candidate;
    this.vm.hoveredCandidate = candidate.id;
    const features = candidate.features
      .map((f) => `<span class="chip">${escapeHtml(f)}</span>`)
      .join(" ");
    this.tooltip.innerHTML =
      `<div class="tooltip-sql">${escapeHtml(candidate.sql)}</div>` +
      `<div class="tooltip-features">${features}</div>` +
      `<div class="tooltip-shape">${candidate.glyph.rows} rows x ${candidate.glyph.cols} cols, ` +
      `weight ${(candidate.weight * 100).toFixed(1)}%</div>`;
    this.tooltip.classList.remove("hidden");
  }

  private hideTooltip(): void {
    this.vm.hoveredCandidate = null;
    this.tooltip.classList.add("hidden");
  }
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;");
}
