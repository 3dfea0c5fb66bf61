// Official architecture strings -> canonical keys.
//
// Canonical grammars (the harness side of the contract):
//   macro    eight digits 0-2, one per layer            e.g. "01201201"
//   channel  seven comma-joined widths, no spaces       e.g. "32,40,48,64,96,112,128"
//   cell     six digits 0-4, edges in lexicographic     e.g. "013240"
//            order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
//
// The cell mapping is the only nontrivial one. The official arch_str
// groups edges by target node:
//
//   |op~0|+|op~0|op~1|+|op~0|op~1|op~2|
//
// which reads off edges in the order (0,1),(0,2),(1,2),(0,3),(1,3),(2,3).
// Positions 2 and 3 swap when re-sorting lexicographically; the rest
// already agree.

import { ArchiveFormatError } from "./types";

export const CELL_OPS = [
  "none",
  "skip_connect",
  "nor_conv_1x1",
  "nor_conv_3x3",
  "avg_pool_3x3",
] as const;

// official edge index -> canonical edge index
const OFFICIAL_TO_CANONICAL = [0, 1, 3, 2, 4, 5];

const CHANNEL_LAYERS = 7;

export function macroKey(official: string): string {
  if (!/^[0-2]{8}$/.test(official)) {
    throw new ArchiveFormatError(
      `bad macro architecture string ${JSON.stringify(official)}: want eight digits 0-2`,
    );
  }
  return official;
}

/**
 * Channel archives key their records with a printed Python sequence,
 * "[32, 40, 48, 64, 96, 112, 128]" or the tuple equivalent. Strip the
 * wrapper and rejoin without spaces.
 */
export function channelKey(official: string): string {
  const trimmed = official.trim();
  let body = trimmed;
  if (
    (body.startsWith("[") && body.endsWith("]")) ||
    (body.startsWith("(") && body.endsWith(")"))
  ) {
    body = body.slice(1, -1);
  }
  const parts = body.split(",").map((p) => p.trim());
  if (parts.length !== CHANNEL_LAYERS) {
    throw new ArchiveFormatError(
      `bad channel architecture string ${JSON.stringify(official)}: want ${CHANNEL_LAYERS} widths, got ${parts.length}`,
    );
  }
  const widths = parts.map((p) => {
    if (!/^[1-9][0-9]*$/.test(p)) {
      throw new ArchiveFormatError(
        `bad channel architecture string ${JSON.stringify(official)}: ${JSON.stringify(p)} is not a positive integer`,
      );
    }
    return Number(p);
  });
  return widths.join(",");
}

/**
 * Map an official cell arch_str to the canonical six-digit key,
 * re-ordering edges from by-target-node to lexicographic.
 */
export function cellKey(official: string): string {
  const nodes = official.split("+");
  if (nodes.length !== 3) {
    throw new ArchiveFormatError(
      `bad cell architecture string ${JSON.stringify(official)}: want 3 "+"-separated node groups`,
    );
  }
  const officialDigits: number[] = [];
  nodes.forEach((node, nodeIdx) => {
    // each group looks like "|op~0|op~1|": empty fragments at both ends
    const fragments = node.split("|");
    if (fragments[0] !== "" || fragments[fragments.length - 1] !== "") {
      throw new ArchiveFormatError(
        `bad cell architecture string ${JSON.stringify(official)}: node group ${nodeIdx} not "|"-delimited`,
      );
    }
    const edges = fragments.slice(1, -1);
    if (edges.length !== nodeIdx + 1) {
      throw new ArchiveFormatError(
        `bad cell architecture string ${JSON.stringify(official)}: node group ${nodeIdx} lists ${edges.length} edges, want ${nodeIdx + 1}`,
      );
    }
    edges.forEach((edge, sourceIdx) => {
      const m = /^(.+)~([0-9])$/.exec(edge);
      if (!m || Number(m[2]) !== sourceIdx) {
        throw new ArchiveFormatError(
          `bad cell architecture string ${JSON.stringify(official)}: edge ${JSON.stringify(edge)} should read "<op>~${sourceIdx}"`,
        );
      }
      const op = CELL_OPS.indexOf(m[1] as (typeof CELL_OPS)[number]);
      if (op < 0) {
        throw new ArchiveFormatError(
          `bad cell architecture string ${JSON.stringify(official)}: unknown op ${JSON.stringify(m[1])}`,
        );
      }
      officialDigits.push(op);
    });
  });
  const canonical = new Array<number>(6);
  officialDigits.forEach((digit, i) => {
    canonical[OFFICIAL_TO_CANONICAL[i]] = digit;
  });
  return canonical.join("");
}

/** Grammar check for a finished canonical key, used as a final gate. */
export function keyPattern(space: "macro" | "channel" | "cell"): RegExp {
  switch (space) {
    case "macro":
      return /^[0-2]{8}$/;
    case "channel":
      return /^[1-9][0-9]*(,[1-9][0-9]*){6}$/;
    case "cell":
      return /^[0-4]{6}$/;
  }
}
