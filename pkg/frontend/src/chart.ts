/** Lottery history chart: sliding-window traces plus running time averages.
 *
 * Rendering produces a self-contained SVG string so the chart is testable
 * without a DOM; the app injects the markup into a container element.
 */

const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
];

export class LotteryChart {
  private history: number[][] = [];
  private sums: number[];

  constructor(
    public readonly nAlternatives: number,
    public readonly window: number = 100,
  ) {
    if (nAlternatives < 1) throw new Error("need at least one alternative");
    if (window < 2) throw new Error("window must be >= 2");
    this.sums = new Array<number>(nAlternatives).fill(0);
  }

  push(lottery: number[]): void {
    if (lottery.length !== this.nAlternatives) {
      throw new Error("lottery length mismatch");
    }
    this.history.push([...lottery]);
    for (let a = 0; a < this.nAlternatives; a++) this.sums[a] += lottery[a];
  }

  get length(): number {
    return this.history.length;
  }

  /** Running time average over the full history. */
  averages(): number[] {
    const n = Math.max(this.history.length, 1);
    return this.sums.map((s) => s / n);
  }

  /** The last `window` lotteries, oldest first. */
  windowed(): number[][] {
    return this.history.slice(-this.window);
  }

  renderSvg(width = 480, height = 160): string {
    const rows = this.windowed();
    const pad = 4;
    const w = width - 2 * pad;
    const h = height - 2 * pad;
    const parts: string[] = [
      `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
        `class="lottery-chart" role="img">`,
      `<rect x="0" y="0" width="${width}" height="${height}" fill="#fafafa"/>`,
    ];
    const y = (v: number) => pad + (1 - Math.min(Math.max(v, 0), 1)) * h;
    if (rows.length >= 2) {
      const x = (i: number) => pad + (i / (rows.length - 1)) * w;
      for (let a = 0; a < this.nAlternatives; a++) {
        const pts = rows
          .map((row, i) => `${x(i).toFixed(1)},${y(row[a]).toFixed(1)}`)
          .join(" ");
        parts.push(
          `<polyline points="${pts}" fill="none" ` +
            `stroke="${PALETTE[a % PALETTE.length]}" stroke-width="1.5" ` +
            `data-series="window-${a}"/>`,
        );
      }
    }
    const avgs = this.averages();
    for (let a = 0; a < this.nAlternatives; a++) {
      const yy = y(avgs[a]).toFixed(1);
      parts.push(
        `<line x1="${pad}" y1="${yy}" x2="${pad + w}" y2="${yy}" ` +
          `stroke="${PALETTE[a % PALETTE.length]}" stroke-dasharray="4 3" ` +
          `data-series="average-${a}"/>`,
      );
    }
    parts.push("</svg>");
    return parts.join("");
  }
}
