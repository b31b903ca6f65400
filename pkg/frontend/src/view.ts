import type { ParseRendering, ResultItem, UiError, UiState } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function chip(kind: string, label: string, badge?: string): HTMLElement {
  const node = el('span', `chip chip-${kind}`, label);
  if (badge) node.appendChild(el('span', 'badge', badge));
  return node;
}

export function renderChips(container: HTMLElement, parsed: ParseRendering | null): void {
  container.replaceChildren();
  if (!parsed) return;
  for (const c of parsed.concepts) {
    const badge = c.origin === 'EXPANDED' ? `EXPANDED+${c.hop}` : c.origin;
    container.appendChild(chip('concept', c.label, badge));
  }
  for (const intent of parsed.relation_intents) {
    container.appendChild(chip('intent', intent));
  }
  for (const cohort of parsed.cohorts) {
    container.appendChild(chip('cohort', cohort.label, 'COHORT'));
  }
  for (const term of parsed.residual_terms) {
    container.appendChild(chip('residual', term));
  }
}

export function renderNotices(
  container: HTMLElement,
  notices: string[],
  onDismiss: (index: number) => void,
): void {
  container.replaceChildren();
  notices.forEach((text, index) => {
    const notice = el('div', 'notice', text);
    const dismiss = el('button', 'notice-dismiss', '×');
    dismiss.type = 'button';
    dismiss.addEventListener('click', () => onDismiss(index));
    notice.appendChild(dismiss);
    container.appendChild(notice);
  });
}

/** Sentence text with every matched term wrapped in <mark>. */
function highlighted(sentence: string, terms: string[]): HTMLElement {
  const holder = el('p', 'sentence');
  const needles = terms.filter((t) => t.trim() !== '');
  if (!sentence || needles.length === 0) {
    holder.textContent = sentence;
    return holder;
  }
  const escaped = needles
    .map((t) => t.replace(/[.*+?^${}()|[\]\\]/g, '\\$&'))
    .sort((a, b) => b.length - a.length);
  const splitter = new RegExp(`(${escaped.join('|')})`, 'gi');
  for (const part of sentence.split(splitter)) {
    if (part === '') continue;
    if (splitter.test(part)) {
      holder.appendChild(el('mark', undefined, part));
    } else {
      holder.appendChild(document.createTextNode(part));
    }
    splitter.lastIndex = 0;
  }
  return holder;
}

export function renderResults(container: HTMLElement, results: ResultItem[]): void {
  container.replaceChildren();
  for (const r of results) {
    const item = el('li', 'result');
    item.dataset.snippetId = r.snippet_id;
    item.appendChild(el('h3', 'result-title', r.doc_title));
    item.appendChild(el('div', 'breadcrumbs', [r.doc_title, ...r.section_path].join(' › ')));
    item.appendChild(highlighted(r.top_sentence, r.matched_terms));
    const details = el('details', 'explanation');
    details.appendChild(el('summary', undefined, `score ${r.score.toFixed(4)}`));
    const list = el('ul');
    for (const line of r.explanation) {
      list.appendChild(el('li', undefined, line));
    }
    details.appendChild(list);
    item.appendChild(details);
    container.appendChild(item);
  }
}

export function renderError(
  container: HTMLElement,
  validation: HTMLElement,
  error: UiError | null,
  onRetry: () => void,
): void {
  container.replaceChildren();
  validation.replaceChildren();
  if (!error) return;
  if (error.kind === 'validation') {
    validation.textContent = error.message;
    return;
  }
  const banner = el('div', 'banner', `search failed: ${error.message} `);
  const retry = el('button', 'retry', 'Retry');
  retry.type = 'button';
  retry.addEventListener('click', onRetry);
  banner.appendChild(retry);
  container.appendChild(banner);
}

export interface ViewElements {
  chips: HTMLElement;
  notices: HTMLElement;
  results: HTMLElement;
  banner: HTMLElement;
  validation: HTMLElement;
  status: HTMLElement;
}

export function renderAll(
  elements: ViewElements,
  state: UiState,
  handlers: { onDismiss: (index: number) => void; onRetry: () => void },
): void {
  renderChips(elements.chips, state.parsed);
  renderNotices(elements.notices, state.notices, handlers.onDismiss);
  renderResults(elements.results, state.results);
  renderError(elements.banner, elements.validation, state.error, handlers.onRetry);
  elements.status.textContent = state.loading ? 'searching…' : '';
}
