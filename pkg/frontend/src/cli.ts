#!/usr/bin/env node
import { writeFileSync } from "fs";

import { FigureKind, render } from "./figures";
import { EmptyInputError, SchemaMismatchError } from "./schema";

const USAGE = "usage: figures <curves|lambda_sweep|cp_bars> --in <paths...> --out <file>";

export function main(argv: string[]): number {
  const kind = argv[0] as FigureKind | undefined;
  if (!kind || !["curves", "lambda_sweep", "cp_bars"].includes(kind)) {
    console.error(USAGE);
    return 64;
  }
  const inputs: string[] = [];
  let out = "";
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === "--in") {
      while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) inputs.push(argv[++i]);
    } else if (argv[i] === "--out") {
      out = argv[++i] ?? "";
    } else {
      console.error(`unknown argument ${argv[i]}\n${USAGE}`);
      return 64;
    }
  }
  if (!out) {
    console.error(USAGE);
    return 64;
  }
  try {
    writeFileSync(out, render(kind, inputs));
  } catch (err) {
    if (err instanceof SchemaMismatchError) {
      console.error(`schema mismatch: ${err.message}`);
      return 2;
    }
    if (err instanceof EmptyInputError) {
      console.error(`empty input: ${err.message}`);
      return 3;
    }
    throw err;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
