import { SessionApi } from "./api";
import { ActionSpace } from "./render/actionSpace";
import { DecisionPanel } from "./render/decisionPanel";
import { OutputTable } from "./render/outputTable";
import { PredictedQuery } from "./render/predictedQuery";
import { ViewModel } from "./viewmodel";

export interface App {
  vm: ViewModel;
  actionSpace: ActionSpace;
  decisionPanel: DecisionPanel;
  predictedQuery: PredictedQuery;
  outputTable: OutputTable;
}

/** Build the three analysis views plus the output table inside `root`. */
export function mountApp(root: HTMLElement, api: SessionApi): App {
  root.innerHTML = `
    <header>
      <label>task <select data-testid="task-select"></select></label>
      <span class="utterance" data-testid="utterance"></span>
      <span class="status" data-testid="status"></span>
    </header>
    <main>
      <section class="panel" data-panel="action-space">
        <h2>Action Space</h2>
        <div class="action-space-host"></div>
      </section>
      <aside class="side">
        <section class="panel" data-panel="decision-space"></section>
        <section class="panel" data-panel="predicted-query"></section>
      </aside>
    </main>
    <footer class="panel" data-panel="predicted-output"></footer>
  `;

  const vm = new ViewModel(api);
  const app: App = {
    vm,
    actionSpace: new ActionSpace(
      root.querySelector(".action-space-host") as HTMLElement,
      vm,
    ),
    decisionPanel: new DecisionPanel(
      root.querySelector('[data-panel="decision-space"]') as HTMLElement,
      vm,
    ),
    predictedQuery: new PredictedQuery(
      root.querySelector('[data-panel="predicted-query"]') as HTMLElement,
      vm,
    ),
    outputTable: new OutputTable(
      root.querySelector('[data-panel="predicted-output"]') as HTMLElement,
      vm,
    ),
  };

  const utterance = root.querySelector('[data-testid="utterance"]') as HTMLElement;
  const status = root.querySelector('[data-testid="status"]') as HTMLElement;
  vm.onChange(() => {
    utterance.textContent = vm.view ? vm.view.utterance : "";
    const parts: string[] = [];
    if (vm.view) {
      parts.push(`turn ${vm.view.turn}`, `${vm.view.candidates.length} candidates`);
      if (vm.view.terminal) parts.push("resolved");
    }
    if (vm.pending) parts.push("...");
    status.textContent = parts.join(" - ");
    status.setAttribute("data-candidates", vm.view ? String(vm.view.candidates.length) : "0");
  });

  const select = root.querySelector('[data-testid="task-select"]') as HTMLSelectElement;
  select.addEventListener("change", () => {
    if (select.value) void vm.start({ task_id: select.value });
  });
  void api
    .listTasks()
    .then((tasks) => {
      for (const task of tasks.filter((t) => t.has_cache)) {
        const option = document.createElement("option");
        option.value = task.id;
        option.textContent = `${task.id} (${task.ambiguity_type ?? "?"})`;
        select.appendChild(option);
      }
      if (select.options.length > 0) {
        select.value = select.options[0].value;
        void vm.start({ task_id: select.value });
      }
    })
    .catch(() => {
      status.textContent = "service unreachable";
    });

  return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountApp(document.getElementById("app") as HTMLElement, new SessionApi(""));
}
