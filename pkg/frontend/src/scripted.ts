/** Scripted voter: always prefers the alternative nearer a fixed point. */

import type { AlternativeCard, AnswerResponse, QueryResponse } from "./api.js";
import { ApaClient } from "./api.js";

export interface Point {
  x: number;
  y: number;
}

function dist2(a: AlternativeCard, p: Point): number {
  const dx = a.x - p.x;
  const dy = a.y - p.y;
  return dx * dx + dy * dy;
}

/** Winner of a pairwise query for a voter at `point`; ties to the lower id. */
export function nearestChoice(query: QueryResponse, point: Point): number {
  const d1 = dist2(query.a1, point);
  const d2 = dist2(query.a2, point);
  if (d1 < d2) return query.a1.id;
  if (d2 < d1) return query.a2.id;
  return Math.min(query.a1.id, query.a2.id);
}

export function nearestAlternative(alternatives: AlternativeCard[], point: Point): number {
  let best = alternatives[0];
  for (const alt of alternatives) {
    if (dist2(alt, point) < dist2(best, point)) best = alt;
  }
  return best.id;
}

export interface ScriptedResult {
  sessionId: string;
  rounds: number;
  lottery: number[];
}

/** Run `rounds` query/answer cycles against a fresh session.
 *
 * `onStep` sees every intermediate query and post-answer lottery, so callers
 * can render each state (the integration test drives the chart and map
 * through it).
 */
export async function runScriptedSession(
  client: ApaClient,
  point: Point,
  rounds: number,
  onStep?: (query: QueryResponse, answer: AnswerResponse) => void,
): Promise<ScriptedResult> {
  const created = await client.createSession({});
  let lottery = created.lottery;
  for (let t = 0; t < rounds; t++) {
    const query = await client.getQuery(created.session_id);
    const answer = await client.postAnswer(
      created.session_id,
      nearestChoice(query, point),
    );
    lottery = answer.lottery;
    onStep?.(query, answer);
  }
  return { sessionId: created.session_id, rounds, lottery };
}
