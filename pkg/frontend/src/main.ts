import { ApiClient, ApiError } from "./api";
import { DecisionBuffer } from "./buffer";
import { actionForKey } from "./keyboard";
import {
  applyAction,
  applyMetrics,
  fromQueue,
  markConflict,
  markOffline,
  reconcile,
  setJob,
  type AppState,
} from "./state";
import { renderApp } from "./render";

const api = new ApiClient("");
const buffer = new DecisionBuffer();

async function resolveTarget(): Promise<{ project: string; code: string; reviewer: string }> {
  const params = new URLSearchParams(window.location.search);
  const reviewer = params.get("reviewer") ?? "reviewer";
  let project = params.get("project");
  if (!project) {
    const listing = await api.projects();
    project = listing.projects[0] ?? null;
  }
  if (!project) {
    throw new Error("no review projects found");
  }
  let code = params.get("code");
  if (!code) {
    const info = await api.projectInfo(project);
    code = info.queue?.code ?? null;
  }
  if (!code) {
    throw new Error(`project ${project} has no review queue`);
  }
  return { project, code, reviewer };
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const { project, code, reviewer } = await resolveTarget();
  let state: AppState = fromQueue(project, code, reviewer, await api.queue(project, code));

  const draw = () => {
    root.innerHTML = renderApp(state);
  };

  const refreshMetrics = async () => {
    try {
      state = applyMetrics(state, await api.metrics(project, code));
      state = markOffline(state, false);
    } catch {
      state = markOffline(state, true);
    }
  };

  const reloadQueue = async () => {
    const page = await api.queue(project, code);
    state = { ...fromQueue(project, code, reviewer, page), metrics: state.metrics };
    await refreshMetrics();
  };

  const flush = async () => {
    const result = await buffer.flush((submission) => api.decide(project, submission));
    for (const ack of result.acks) {
      state = reconcile(state, ack);
    }
    if (result.failed) {
      if (result.error instanceof ApiError && result.error.status === 409) {
        state = markConflict(state, result.error.message);
      } else {
        state = markOffline(state, true);
      }
    } else {
      state = markOffline(state, false);
    }
  };

  const pollRetrain = async (jobId: string) => {
    state = setJob(state, { id: jobId, status: "running" });
    draw();
    for (let tick = 0; tick < 120; tick++) {
      await new Promise((resolve) => setTimeout(resolve, 500));
      const job = await api.job(project, jobId);
      state = setJob(state, { id: job.id, status: job.status });
      if (job.status !== "running") {
        break;
      }
      draw();
    }
    await reloadQueue();
    state = setJob(state, null);
  };

  document.addEventListener("keydown", (event) => {
    if (event.ctrlKey || event.metaKey || event.altKey) {
      return;
    }
    const action = actionForKey(event.key);
    if (!action) {
      return;
    }
    event.preventDefault();
    void (async () => {
      if (action === "retrain") {
        const { job } = await api.retrain(project, code);
        await pollRetrain(job);
      } else if (action === "resync") {
        await reloadQueue();
      } else {
        const result = applyAction(state, action);
        state = result.state;
        for (const submission of result.submissions) {
          buffer.push(submission);
        }
        await flush();
        if (result.submissions.length > 0) {
          await refreshMetrics();
        }
      }
      draw();
    })();
  });

  await refreshMetrics();
  draw();
}

void boot();
