/** Spawn a real review server (Python CLI) on a free port around each test. */

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export interface LiveServer {
  base: string;
  logPath: string;
  queuePath: string;
  stop(): Promise<void>;
}

export function queueLine(i: number): string {
  const id = `u${String(i).padStart(2, '0')}`;
  return JSON.stringify({
    item: {
      id,
      video: { id: `video-${id}`, source: 'fixture', frames: [] },
      question: 'What is the dog doing in the video?',
      gt_answer: 'The question is unanswerable because the video does not show a dog.',
      k: -1,
      kind: 'object',
      provenance: {
        base_id: `base-${id}`,
        altered: {
          type: 'triplet',
          source_object: { label: 'dog', category: 'Animals' },
          relation: { label: 'walking', category: 'Intransitive Actions' },
          target_object: { label: 'pedestrians', category: 'Independent Actors' },
        },
        alteration: {
          kind: 'source_object',
          original: 'cat',
          replacement: 'dog',
          category: 'Animals',
        },
      },
    },
    original_description: 'cat walking pedestrians',
    frames: [],
  });
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, '127.0.0.1', () => {
      const address = srv.address();
      if (address === null || typeof address === 'string') {
        reject(new Error('no port assigned'));
        return;
      }
      const port = address.port;
      srv.close(() => resolve(port));
    });
  });
}

async function waitReady(base: string, child: ChildProcess, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`server exited early with code ${child.exitCode}`);
    }
    try {
      const r = await fetch(`${base}/api/progress`);
      if (r.ok) return;
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error(`server not ready: ${String(lastError)}`);
}

export async function startServer(nItems = 10): Promise<LiveServer> {
  const dir = mkdtempSync(join(tmpdir(), 'review-ui-'));
  const queuePath = join(dir, 'queue.jsonl');
  const logPath = join(dir, 'log.jsonl');
  const lines = Array.from({ length: nItems }, (_v, i) => queueLine(i));
  writeFileSync(queuePath, lines.join('\n') + '\n');

  const port = await freePort();
  const child = spawn(
    'python3',
    [
      '-m', 'answerability.cli',
      'review', 'serve',
      '--queue', queuePath,
      '--log', logPath,
      '--port', String(port),
    ],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  const stderr: string[] = [];
  child.stderr?.on('data', (chunk: Buffer) => stderr.push(chunk.toString()));

  const base = `http://127.0.0.1:${port}`;
  try {
    await waitReady(base, child);
  } catch (err) {
    child.kill('SIGKILL');
    throw new Error(`${String(err)}\nserver stderr:\n${stderr.join('')}`);
  }

  return {
    base,
    logPath,
    queuePath,
    stop: () =>
      new Promise<void>((resolve) => {
        if (child.exitCode !== null) {
          resolve();
          return;
        }
        const killTimer = setTimeout(() => child.kill('SIGKILL'), 2000);
        child.once('exit', () => {
          clearTimeout(killTimer);
          resolve();
        });
        child.kill('SIGTERM');
      }),
  };
}

/** Parsed decision/rating log; an absent file means no event was acknowledged. */
export function logEntries(logPath: string): Array<Record<string, unknown>> {
  let raw: string;
  try {
    raw = readFileSync(logPath, 'utf-8');
  } catch {
    return [];
  }
  return raw
    .split('\n')
    .filter((line: string) => line.trim().length > 0)
    .map((line: string) => JSON.parse(line) as Record<string, unknown>);
}

/** Poll until `check` passes; rejects after the deadline with the last failure. */
export async function until(check: () => boolean | Promise<boolean>, timeoutMs = 10000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await check()) return;
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
  throw new Error('condition not met before timeout');
}
