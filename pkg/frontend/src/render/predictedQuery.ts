import { ViewModel } from "../viewmodel";

/** Probable atomic features of the final query. Determined features are
 * solid; unconfirmed ones carry a border and their probability. Hovering
 * a feature highlights its carrier glyphs; Yes/No posts a singleton
 * decision on that feature. */
export class PredictedQuery {
  constructor(
    private readonly root: HTMLElement,
    private readonly vm: ViewModel,
  ) {
    vm.onChange(() => this.render());
    this.render();
  }

  render(): void {
    const view = this.vm.view;
    this.root.replaceChildren();
    const heading = document.createElement("h2");
    heading.textContent = "Predicted Query";
    this.root.appendChild(heading);
    if (!view) return;

    const list = document.createElement("div");
    list.className = "predicted-list";
    list.setAttribute("data-testid", "predicted-list");
    for (const entry of view.predicted_features) {
      const row = document.createElement("div");
      row.className = "predicted-row";

      const chip = document.createElement("span");
      chip.className = entry.determined ? "chip determined" : "chip unconfirmed";
      chip.textContent = entry.feature;
      chip.setAttribute("data-feature", entry.feature);
      chip.setAttribute("data-feature-id", entry.id);
      chip.setAttribute("data-probability", String(entry.probability));
      chip.setAttribute("data-determined", String(entry.determined));
      chip.addEventListener("pointerenter", () => this.vm.setHoveredFeature(entry.feature));
      chip.addEventListener("pointerleave", () => this.vm.setHoveredFeature(null));
      row.appendChild(chip);

      const probability = document.createElement("span");
      probability.className = "probability";
      probability.textContent = entry.determined
        ? "determined"
        : `${(entry.probability * 100).toFixed(0)}%`;
      row.appendChild(probability);

      const yes = document.createElement("button");
      yes.textContent = "Y";
      yes.className = "mini yes-feature";
      yes.addEventListener("click", () => void this.vm.decide(entry.id, "yes"));
      row.appendChild(yes);

      const no = document.createElement("button");
      no.textContent = "N";
      no.className = "mini no-feature";
      no.addEventListener("click", () => void this.vm.decide(entry.id, "no"));
      row.appendChild(no);

      list.appendChild(row);
    }
    this.root.appendChild(list);
  }
}
