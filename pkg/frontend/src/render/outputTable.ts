import { ViewModel } from "../viewmodel";

/** Output of the current highest-weight candidate. */
export class OutputTable {
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
    heading.textContent = "Predicted Output";
    this.root.appendChild(heading);
    if (!view) return;

    const table = document.createElement("table");
    table.className = "output-table";
    table.setAttribute("data-testid", "output-table");
    const head = table.createTHead().insertRow();
    for (const column of view.predicted_output.columns) {
      const cell = document.createElement("th");
      cell.textContent = column;
      head.appendChild(cell);
    }
    const body = table.createTBody();
    for (const row of view.predicted_output.rows) {
      const tr = body.insertRow();
      for (const value of row) {
        tr.insertCell().textContent = value === null ? "NULL" : String(value);
      }
    }
    this.root.appendChild(table);
    const count = document.createElement("div");
    count.className = "row-count";
    count.textContent = `${view.predicted_output.rows.length} rows`;
    this.root.appendChild(count);
  }
}
