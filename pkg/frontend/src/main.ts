import { initApp } from './app.js';

window.addEventListener('DOMContentLoaded', () => {
  initApp(document);
});
