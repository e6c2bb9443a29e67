import { ViewModel } from "../viewmodel";

/** Ranked decision variables, one at a time: the group is shown in red
 * inside an example query, implicit features get a low-opacity overlay,
 * and Yes/No/Back drive the server. Arrow keys browse alternatives
 * without touching the session. */
export class DecisionPanel {
  constructor(
    private readonly root: HTMLElement,
    private readonly vm: ViewModel,
  ) {
    vm.onChange(() => this.render());
    document.addEventListener("keydown", (event) => {
      if (event.key === "ArrowDown") {
        this.vm.cycleVariable(1);
        event.preventDefault();
      } else if (event.key === "ArrowUp") {
        this.vm.cycleVariable(-1);
        event.preventDefault();
      }
    });
    this.render();
  }

  render(): void {
    const view = this.vm.view;
    this.root.replaceChildren();
    const heading = el("h2", "Decision Space");
    this.root.appendChild(heading);
    if (!view) return;

    if (view.terminal) {
      const done = el("div", "All remaining candidates are functionally equivalent.");
      done.className = "terminal-banner";
      this.root.appendChild(done);
      this.appendBack(view.turn);
      return;
    }

    const variable = this.vm.currentVariable();
    if (!variable) {
      this.root.appendChild(el("div", "No decision variables available."));
      this.appendBack(view.turn);
      return;
    }

    const n = view.variables.length;
    const index = view.variables.findIndex((v) => v.id === variable.id);
    const meta = el("div", `variable ${index + 1} of ${n} - gain ${variable.ig_bits.toFixed(3)} bits`);
    meta.className = "variable-meta";
    this.root.appendChild(meta);

    const group = document.createElement("div");
    group.className = "variable-group";
    group.setAttribute("data-testid", "variable-group");
    group.setAttribute("data-variable-id", variable.id);
    for (const feature of variable.features) {
      group.appendChild(chip(feature, "chip decision"));
    }
    this.root.appendChild(group);

    const example = view.candidates.find((c) => c.id === variable.example_candidate_id);
    if (example) {
      const label = el("div", "example query");
      label.className = "example-label";
      this.root.appendChild(label);
      const exampleBox = document.createElement("div");
      exampleBox.className = "example-query";
      const implicit = new Set(variable.implicit.map((i) => i.feature));
      for (const feature of example.features) {
        let cls = "chip";
        if (variable.features.includes(feature)) cls = "chip decision";
        else if (implicit.has(feature)) cls = "chip implicit";
        exampleBox.appendChild(chip(feature, cls));
      }
      this.root.appendChild(exampleBox);
    }

    const controls = document.createElement("div");
    controls.className = "controls";
    controls.appendChild(
      button("Yes", "yes-button", () => void this.vm.decide(variable.id, "yes")),
    );
    controls.appendChild(
      button("No", "no-button", () => void this.vm.decide(variable.id, "no")),
    );
    controls.appendChild(
      button("▲", "skip-button", () => this.vm.cycleVariable(-1)),
    );
    controls.appendChild(
      button("▼", "skip-button", () => this.vm.cycleVariable(1)),
    );
    this.root.appendChild(controls);
    this.appendBack(view.turn);

    if (this.vm.lastError) {
      const err = el("div", this.vm.lastError);
      err.className = "error-banner";
      this.root.appendChild(err);
    }
  }

  private appendBack(turn: number): void {
    const back = button("Back", "back-button", () => void this.vm.undo());
    if (turn === 0) back.setAttribute("disabled", "disabled");
    this.root.appendChild(back);
  }
}

function el(tag: string, text: string): HTMLElement {
  const node = document.createElement(tag);
  node.textContent = text;
  return node;
}

function chip(text: string, className: string): HTMLElement {
  const node = document.createElement("span");
  node.className = className;
  node.textContent = text;
  node.setAttribute("data-feature", text);
  return node;
}

function button(label: string, className: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.className = className;
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}
