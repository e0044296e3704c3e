/** Browser wiring: one annotation session with live chart and map.
 *
 * The page shows the current pair as two buttons; clicking one posts the
 * answer, refreshes the visualizations, and fetches the next pair. A single
 * in-flight lock ignores clicks while a request is pending, so the server
 * never sees an answer without a matching query.
 */

import { ApaClient, ApiError, type QueryResponse, type ServiceInfo } from "./api.js";
import { LotteryChart } from "./chart.js";
import { renderMap } from "./map.js";

export interface AppElements {
  status: HTMLElement;
  buttonA: HTMLButtonElement;
  buttonB: HTMLButtonElement;
  chart: HTMLElement;
  map: HTMLElement;
}

export class AnnotationApp {
  private chart!: LotteryChart;
  private info!: ServiceInfo;
  private sessionId!: string;
  private query: QueryResponse | null = null;
  private busy = false;

  constructor(
    private readonly client: ApaClient,
    private readonly el: AppElements,
  ) {}

  async start(): Promise<void> {
    this.info = await this.client.info();
    this.chart = new LotteryChart(this.info.n_alternatives);
    const created = await this.client.createSession({});
    this.sessionId = created.session_id;
    this.chart.push(created.lottery);
    this.el.buttonA.addEventListener("click", () => void this.answer("a1"));
    this.el.buttonB.addEventListener("click", () => void this.answer("a2"));
    await this.nextQuery();
  }

  private render(lottery: number[]): void {
    this.el.chart.innerHTML = this.chart.renderSvg();
    this.el.map.innerHTML = renderMap({
      alternatives: this.info.alternatives,
      lottery,
      pendingPair: this.query ? [this.query.a1.id, this.query.a2.id] : undefined,
    });
  }

  private async nextQuery(): Promise<void> {
    this.query = await this.client.getQuery(this.sessionId);
    this.el.buttonA.textContent = this.query.a1.label;
    this.el.buttonB.textContent = this.query.a2.label;
    this.el.status.textContent = `answers: ${this.query.answer_count} — which do you prefer?`;
    this.render(this.query.lottery);
  }

  private async answer(side: "a1" | "a2"): Promise<void> {
    if (this.busy || !this.query) return; // ignore clicks mid-request
    this.busy = true;
    try {
      const winner = side === "a1" ? this.query.a1.id : this.query.a2.id;
      const resp = await this.client.postAnswer(this.sessionId, winner);
      this.query = null;
      this.chart.push(resp.lottery);
      this.render(resp.lottery);
      await this.nextQuery();
    } catch (err) {
      this.el.status.textContent =
        err instanceof ApiError ? err.message : "request failed";
    } finally {
      this.busy = false;
    }
  }
}

export function mount(baseUrl: string, root: Document = document): AnnotationApp {
  const byId = (id: string) => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  };
  const app = new AnnotationApp(new ApaClient(baseUrl), {
    status: byId("status"),
    buttonA: byId("choice-a") as HTMLButtonElement,
    buttonB: byId("choice-b") as HTMLButtonElement,
    chart: byId("chart"),
    map: byId("map"),
  });
  void app.start();
  return app;
}
