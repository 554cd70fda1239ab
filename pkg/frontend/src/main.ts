import { ReviewApi } from "./api.js";
import { DashboardController } from "./dashboard.js";
import { TriageController } from "./triage.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? window.location.origin;
}

async function boot(): Promise<void> {
  const api = new ReviewApi(apiBase());
  const nav = document.querySelector<HTMLElement>("#classes")!;
  const triage = new TriageController(document.querySelector<HTMLElement>("#triage")!, api);
  const dashboard = new DashboardController(
    document.querySelector<HTMLElement>("#dashboard")!,
    api,
  );
  triage.attach();
  // verdicts change the pending counts the dashboard shows
  triage.onChange = () => void dashboard.refresh();
  dashboard.onClosed = () => void triage.reload();

  const view = await api.classes();
  nav.innerHTML = view.classes
    .map((row) => `<button class="class-tab" data-class="${row.class_key}">${row.class_key}</button>`)
    .join("");
  nav.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const classKey = target.dataset.class;
    if (classKey) {
      void triage.open(classKey);
    }
  });
  if (view.classes.length > 0) {
    await triage.open(view.classes[0].class_key);
  }
  await dashboard.refresh();
}

void boot();
