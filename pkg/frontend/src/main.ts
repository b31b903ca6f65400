import { SearchClient } from './api.js';
import { createApp } from './app.js';

const meta = document.querySelector<HTMLMetaElement>('meta[name="focalmed-base"]');
const baseUrl = meta?.content ?? '';

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app container');
}
createApp(root, new SearchClient(baseUrl));
