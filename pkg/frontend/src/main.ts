import { ReviewApi } from './api';
import { SessionController } from './state';
import { SessionView } from './view';

/**
 * Config resolution: query parameters win and are persisted, so a rater
 * can be sent one link and later reopen the page bare.
 */
function readConfig(): { baseUrl: string; studyId: string; raterId: string; token?: string } | null {
  const params = new URLSearchParams(window.location.search);
  const keys = ['base', 'study', 'rater', 'token'] as const;
  const values: Record<string, string> = {};
  for (const key of keys) {
    const fromQuery = params.get(key);
    if (fromQuery !== null) {
      localStorage.setItem(`voxsynth.${key}`, fromQuery);
    }
    values[key] = fromQuery ?? localStorage.getItem(`voxsynth.${key}`) ?? '';
  }
  if (!values.base || !values.study || !values.rater) return null;
  return {
    baseUrl: values.base,
    studyId: values.study,
    raterId: values.rater,
    token: values.token || undefined,
  };
}

const root = document.getElementById('app');
if (root) {
  const config = readConfig();
  if (!config) {
    root.textContent =
      'Missing configuration: open this page with ?base=<service url>&study=<id>&rater=<id>';
  } else {
    const api = new ReviewApi(config);
    const controller = new SessionController(api);
    new SessionView(root, controller, api);
    root.tabIndex = 0; // receive keyboard shortcuts
    void controller.start();
  }
}
