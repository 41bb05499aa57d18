#!/usr/bin/env node
// Entry point: parse flags, then serve the protocol over stdin/stdout.

import { parseArgs } from "node:util";
import { BridgeConfig, DEFAULT_CONFIG, serve } from "./server.js";

function usage(): never {
  process.stderr.write(
    "usage: main.js [--mode gaussian-fallback|model] [--model-path file.mjs]\n" +
      "               [--device cpu] [--mu 0.0] [--sigma0 1.0]\n" +
      "               [--max-voxels N] [--no-strip-variance-head]\n",
  );
  process.exit(2);
}

export function parseConfig(argv: string[]): BridgeConfig {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        mode: { type: "string", default: DEFAULT_CONFIG.mode },
        "model-path": { type: "string" },
        device: { type: "string", default: DEFAULT_CONFIG.device },
        mu: { type: "string", default: String(DEFAULT_CONFIG.mu) },
        sigma0: { type: "string", default: String(DEFAULT_CONFIG.sigma0) },
        "max-voxels": { type: "string", default: String(DEFAULT_CONFIG.maxVoxels) },
        "no-strip-variance-head": { type: "boolean", default: false },
      },
    }));
  } catch {
    usage();
  }
  const mode = values.mode;
  if (mode !== "gaussian-fallback" && mode !== "model") usage();
  if (mode === "model" && !values["model-path"]) usage();
  const cfg: BridgeConfig = {
    mode,
    modelPath: values["model-path"],
    device: values.device ?? DEFAULT_CONFIG.device,
    stripVarianceHead: !values["no-strip-variance-head"],
    mu: Number(values.mu),
    sigma0: Number(values.sigma0),
    maxVoxels: Number(values["max-voxels"]),
  };
  if (!Number.isFinite(cfg.mu) || !Number.isFinite(cfg.sigma0) || !Number.isFinite(cfg.maxVoxels)) {
    usage();
  }
  return cfg;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("main.js") || entry.endsWith("main.ts")) {
  const cfg = parseConfig(process.argv.slice(2));
  serve(cfg, process.stdin, process.stdout)
    .then(() => process.exit(0))
    .catch((err) => {
      process.stderr.write(`bridge fatal: ${err}\n`);
      process.exit(1);
    });
}
