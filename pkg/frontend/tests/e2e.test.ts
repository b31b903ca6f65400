// End-to-end against a real fixture service: the Python pipeline is run on
// the shipped testdata, the HTTP service is spawned, and the page drives
// live /v1/parse and /v1/search calls.

import { execFileSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { SearchClient } from '../src/api.js';
import { createApp } from '../src/app.js';
import type { SearchResponse } from '../src/types.js';

const repoRoot = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '..', '..');
const testdata = path.join(repoRoot, 'testdata');
const port = 8930 + (process.pid % 100);
const baseUrl = `http://127.0.0.1:${port}`;

let service: ChildProcess | undefined;
let dataDir: string;

function cli(args: string[]): void {
  execFileSync('python3', ['-m', 'focalmed.cli', '--data-dir', dataDir, ...args], {
    cwd: repoRoot,
    stdio: 'pipe',
  });
}

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/v1/health`);
      if (response.ok) {
        const body = (await response.json()) as { index_loaded: boolean };
        if (body.index_loaded) return;
      }
    } catch {
      // not up yet
    }
    await sleep(250);
  }
  throw new Error('fixture service did not become healthy');
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function until(check: () => boolean, timeoutMs = 10_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await sleep(50);
  }
  throw new Error('condition not met in time');
}

beforeAll(async () => {
  dataDir = mkdtempSync(path.join(tmpdir(), 'focalmed-e2e-'));
  cli(['ingest-kg', '--kg', path.join(testdata, 'kg.jsonl')]);
  cli(['tag-corpus', '--corpus', path.join(testdata, 'corpus.jsonl')]);
  cli(['build-index']);
  service = spawn(
    'python3',
    ['-m', 'focalmed.cli', '--data-dir', dataDir, 'serve', '--addr', `127.0.0.1:${port}`],
    { cwd: repoRoot, stdio: 'ignore' },
  );
  await waitForHealth();
});

afterAll(async () => {
  service?.kill('SIGTERM');
  await sleep(200);
  rmSync(dataDir, { recursive: true, force: true });
});

describe('search page against the fixture service', () => {
  it('typing shows intent chips; results render in service order', async () => {
    const root = document.createElement('div');
    document.body.appendChild(root);
    const app = createApp(root, new SearchClient(baseUrl), 400);

    app.input.value = 'asthma differential diagnosis';
    app.input.dispatchEvent(new Event('input'));
    // Debounced preview: nothing may be requested during the quiet period.
    await sleep(150);
    expect(app.elements.chips.children.length).toBe(0);
    await until(() => app.elements.chips.children.length > 0);

    const chipTexts = Array.from(app.elements.chips.children).map((c) => c.textContent ?? '');
    expect(chipTexts.some((t) => t.includes('asthma') && t.includes('EXACT'))).toBe(true);
    expect(chipTexts.some((t) => t.includes('HAS_DIFFERENTIAL_DIAGNOSIS'))).toBe(true);

    app.form.dispatchEvent(new Event('submit'));
    await until(() => app.elements.results.children.length > 0);

    const direct = (await (
      await fetch(`${baseUrl}/v1/search?q=${encodeURIComponent('asthma differential diagnosis')}`)
    ).json()) as SearchResponse;
    const expected = direct.results.map((r) => r.snippet_id);
    const rendered = Array.from(
      app.elements.results.querySelectorAll<HTMLElement>('li[data-snippet-id]'),
    ).map((li) => li.dataset.snippetId);
    expect(rendered).toEqual(expected);
    expect(rendered[0]).toBe('S001');
    root.remove();
  });

  it('a corrected query shows the CORRECTED badge', async () => {
    const root = document.createElement('div');
    document.body.appendChild(root);
    const app = createApp(root, new SearchClient(baseUrl), 50);

    app.input.value = 'astma treatment';
    app.input.dispatchEvent(new Event('input'));
    await until(() => app.elements.chips.children.length > 0);
    const badges = Array.from(root.querySelectorAll('.chip-concept .badge')).map(
      (b) => b.textContent,
    );
    expect(badges).toContain('CORRECTED');
    root.remove();
  });

  it('relaxation notices appear for over-constrained queries', async () => {
    const root = document.createElement('div');
    document.body.appendChild(root);
    const app = createApp(root, new SearchClient(baseUrl), 50);

    app.input.value = 'status asthmaticus treatment';
    app.form.dispatchEvent(new Event('submit'));
    await until(() => app.elements.notices.children.length > 0);
    expect(app.elements.notices.children[0].textContent).toContain('dropped:');
    root.remove();
  });
});
