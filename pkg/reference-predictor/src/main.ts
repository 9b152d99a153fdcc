import * as readline from "readline";

import { BUILTINS, evaluateUnit } from "./functions";
import { fitFromCsvFile } from "./fitted";
import { Model, ProtocolSession } from "./protocol";

function resolveModel(spec: string): Model {
  const builtin = BUILTINS[spec];
  if (builtin) {
    return { dim: builtin.dim, predict: (p) => evaluateUnit(builtin, p) };
  }
  if (spec.endsWith(".csv")) {
    return fitFromCsvFile(spec);
  }
  throw new Error(
    `unknown model ${JSON.stringify(spec)}: expected a built-in ` +
      `(${Object.keys(BUILTINS).sort().join(", ")}) or a .csv training file`,
  );
}

export function main(argv: string[]): number {
  const idx = argv.indexOf("--model");
  if (idx === -1 || idx + 1 >= argv.length) {
    process.stderr.write("usage: reference_predictor --model <name|file.csv>\n");
    return 2;
  }
  let model: Model;
  try {
    model = resolveModel(argv[idx + 1]);
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n`);
    return 2;
  }

  const session = new ProtocolSession(model);
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => {
    const reply = session.handleLine(line);
    if (reply === null) return;
    if (reply.type === "bye") {
      rl.close();
      process.exit(0);
    }
    process.stdout.write(JSON.stringify(reply) + "\n");
  });
  rl.on("close", () => process.exit(0));
  return 0;
}

if (require.main === module) {
  const code = main(process.argv.slice(2));
  if (code !== 0) process.exit(code);
}
