/**
 * Integration: a real broker process, spoken to over its websocket
 * transport. One client plays the simulation driver, a second is the
 * viewer; the viewer's History must end up with the topology, every
 * frame (lockstep via an ack variable), and the done marker.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { createServer } from "node:net";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import WebSocket from "ws";

import { UnknownGroup, WorkspaceClient } from "../src/client.js";
import { History } from "../src/history.js";
import { bitsToDouble, decodeNamedValues, doublesArray, vbool, vdouble } from "../src/values.js";

const FIXTURES = join(__dirname, "fixtures");

function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) out[i] = parseInt(hex.slice(i * 2, i * 2 + 2), 16);
  return out;
}

async function freePort(): Promise<number> {
  return new Promise((resolve) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
  });
}

let proc: ChildProcess;
let url: string;

beforeAll(async () => {
  const port = await freePort();
  url = `ws://127.0.0.1:${port}`;
  proc = spawn("python3", ["-m", "gridmesh.cli", "serve", "--ws", `127.0.0.1:${port}`], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  await new Promise<void>((resolve, reject) => {
    proc.stdout!.on("data", (chunk: Buffer) => {
      if (chunk.toString().includes("ready")) resolve();
    });
    proc.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
    setTimeout(() => reject(new Error("server start timeout")), 15_000);
  });
}, 20_000);

afterAll(() => {
  proc?.kill();
});

function connect(): Promise<WorkspaceClient> {
  return WorkspaceClient.connect(new WebSocket(url) as never);
}

describe("live streaming over websocket", () => {
  it("handshakes and lists groups", async () => {
    const c = await connect();
    expect(c.sessionId).toBeGreaterThanOrEqual(1);
    await c.join(["probe"]);
    const groups = await c.listGroups();
    expect(groups.get("probe")).toEqual({ members: 1, lastSeq: 0 });
    await c.close();
  });

  it("rejects sends to missing groups atomically", async () => {
    const c = await connect();
    await c.join(["here"]);
    await expect(c.send(["here", "gone"], [["x", vdouble(1)]])).rejects.toThrow(UnknownGroup);
    // the atomic failure must not have written to the existing group
    const viewer = await connect();
    await viewer.join(["here"]);
    expect(await viewer.sync()).toEqual([]);
    await c.close();
    await viewer.close();
  });

  it("streams topology, lockstep frames, and the done marker", { timeout: 30_000 }, async () => {
    const group = "livetest";
    const driver = await connect();
    const viewer = await connect();
    await viewer.join([group]);
    await driver.join([group]);

    const history = new History();
    let acks = 0;
    const viewerLoop = (async () => {
      while (!history.done) {
        const pending = await viewer.wait(10_000);
        if (!pending) throw new Error("viewer timed out waiting for data");
        const batch = await viewer.sync();
        if (batch.length === 0) continue;
        history.ingest(batch);
        acks += 1;
        await viewer.send([group], [["ack", vdouble(acks)]]);
      }
    })();

    const waitForAck = async (n: number) => {
      for (;;) {
        await driver.wait(10_000);
        await driver.sync();
        const got = driver.workspace.get("ack");
        if (got?.kind === "double" && bitsToDouble(got.bits) >= n) return;
      }
    };

    // topology first (reference payload fixture), then frames, then done
    const { hex } = JSON.parse(readFileSync(join(FIXTURES, "parity_topology.json"), "utf-8"));
    const topoPairs = decodeNamedValues(hexToBytes(hex));
    await driver.send([group], topoPairs);
    await waitForAck(1);

    const nFrames = 8;
    const nBuses = 39;
    for (let i = 0; i < nFrames; i++) {
      const values = Array.from({ length: nBuses }, (_, b) => 60 + 0.01 * i + 0.001 * b);
      await driver.send([group], [
        ["ts", vdouble(0.1 * (i + 1))],
        ["freq", doublesArray(values)],
      ]);
      await waitForAck(i + 2);
    }
    await driver.broadcast([["done", vbool(true)]]);
    await viewerLoop;

    expect(history.topology!.buses).toHaveLength(nBuses);
    expect(history.frames).toHaveLength(nFrames); // lockstep: nothing coalesced
    expect(history.frames.map((f) => f.t)).toEqual(
      Array.from({ length: nFrames }, (_, i) => 0.1 * (i + 1)),
    );
    expect(history.done).toBe(true);
    await driver.close();
    await viewer.close();
  });
});
