import { mountApp } from './app';

function boot(): void {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app mount point');
  const params = new URLSearchParams(window.location.search);
  const app = mountApp(root, {
    annotator: params.get('annotator') ?? 'annotator',
    frameCount: Number(params.get('frames') ?? '8'),
  });
  void app.start();
}

if (document.readyState === 'loading') {
  document.addEventListener('DOMContentLoaded', boot);
} else {
  boot();
}
