import type { ClientLike } from './session.js';
import { SearchSession } from './session.js';
import { debounce } from './debounce.js';
import { renderAll, type ViewElements } from './view.js';

export interface App {
  session: SearchSession;
  input: HTMLInputElement;
  form: HTMLFormElement;
  elements: ViewElements;
}

export const PARSE_QUIET_MS = 400;

/** Build the page scaffolding inside `root` and wire it to a session. */
export function createApp(root: HTMLElement, client: ClientLike, quietMs = PARSE_QUIET_MS): App {
  root.innerHTML = `
    <form class="search-form">
      <input type="search" class="search-input" placeholder="e.g. asthma differential diagnosis" autocomplete="off" />
      <button type="submit">Search</button>
    </form>
    <div class="validation" role="alert"></div>
    <div class="error-banner"></div>
    <div class="chips"></div>
    <div class="notices"></div>
    <div class="status"></div>
    <ol class="results"></ol>
  `;
  const input = root.querySelector<HTMLInputElement>('.search-input')!;
  const form = root.querySelector<HTMLFormElement>('.search-form')!;
  const elements: ViewElements = {
    chips: root.querySelector<HTMLElement>('.chips')!,
    notices: root.querySelector<HTMLElement>('.notices')!,
    results: root.querySelector<HTMLElement>('.results')!,
    banner: root.querySelector<HTMLElement>('.error-banner')!,
    validation: root.querySelector<HTMLElement>('.validation')!,
    status: root.querySelector<HTMLElement>('.status')!,
  };

  const session = new SearchSession(client, (state) =>
    renderAll(elements, state, {
      onDismiss: (index) => session.dismissNotice(index),
      onRetry: () => void session.retry(),
    }),
  );

  const preview = debounce((query: string) => void session.preview(query), quietMs);
  input.addEventListener('input', () => {
    const value = input.value;
    if (value.trim() === '') {
      preview.cancel();
    } else {
      preview(value);
    }
  });
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    preview.cancel();
    void session.submit(input.value);
  });

  return { session, input, form, elements };
}
