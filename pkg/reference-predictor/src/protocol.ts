/**
 * Wire-protocol session: newline-delimited JSON, one object per line.
 *
 *   host -> {"type":"hello","dims":D}            -> {"type":"ready"}
 *   host -> {"type":"predict","id":n,"points":…} -> {"type":"result","id":n,"values":…}
 *   host -> {"type":"bye"}                       -> process exit 0
 *
 * Malformed lines produce an error object and the session continues.
 * Predict before hello is refused: the handshake pins the dimension.
 */

export interface Model {
  dim: number;
  predict(point: number[]): number;
}

export type Reply =
  | { type: "ready" }
  | { type: "result"; id: unknown; values: number[] }
  | { type: "error"; id: unknown; message: string }
  | { type: "bye" };

export class ProtocolSession {
  private ready = false;
  requestsSeen = 0;

  constructor(private model: Model) {}

  handleLine(line: string): Reply | null {
    const trimmed = line.trim();
    if (trimmed.length === 0) return null;
    let msg: any;
    try {
      msg = JSON.parse(trimmed);
    } catch {
      return { type: "error", id: null, message: "malformed JSON line" };
    }
    const id = msg && typeof msg === "object" && "id" in msg ? msg.id : null;
    if (!msg || typeof msg !== "object" || typeof msg.type !== "string") {
      return { type: "error", id, message: "expected an object with a type field" };
    }
    switch (msg.type) {
      case "hello":
        if (msg.dims !== this.model.dim) {
          return { type: "error", id, message: `model has dimension ${this.model.dim}` };
        }
        this.ready = true;
        return { type: "ready" };
      case "predict":
        return this.predict(id, msg.points);
      case "bye":
        return { type: "bye" };
      default:
        return { type: "error", id, message: `unknown type ${JSON.stringify(msg.type)}` };
    }
  }

  private predict(id: unknown, points: unknown): Reply {
    if (!this.ready) {
      return { type: "error", id, message: "handshake required" };
    }
    this.requestsSeen += 1;
    if (!Array.isArray(points)) {
      return { type: "error", id, message: "points must be an array" };
    }
    const values = new Array(points.length);
    for (let i = 0; i < points.length; i++) {
      const point = points[i];
      if (
        !Array.isArray(point) ||
        point.length !== this.model.dim ||
        point.some((v) => typeof v !== "number" || !Number.isFinite(v))
      ) {
        return {
          type: "error",
          id,
          message: `point ${i} must be ${this.model.dim} finite numbers`,
        };
      }
      const value = this.model.predict(point as number[]);
      if (!Number.isFinite(value)) {
        return { type: "error", id, message: `non-finite prediction at point ${i}` };
      }
      values[i] = value;
    }
    return { type: "result", id, values };
  }
}
