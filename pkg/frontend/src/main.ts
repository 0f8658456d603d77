// Entry point: mounts the dashboard against the service origin that served
// this page (or ?api=<base> for a different one) and offers a small launcher
// for the predefined scenarios.

import { ApiClient } from "./api.js";
import { Dashboard } from "./app.js";

async function boot() {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? window.location.origin;
  const api = new ApiClient(base);

  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");
  const dashboard = new Dashboard(api, mount);

  const launcher = document.getElementById("launcher");
  if (launcher) {
    const select = document.createElement("select");
    const { predefined } = await api.predefined();
    for (const name of predefined) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      select.appendChild(opt);
    }
    const seed = document.createElement("input");
    seed.type = "number";
    seed.value = "0";
    seed.title = "seed";
    const policy = document.createElement("input");
    policy.placeholder = "suggestion policy (optional)";
    const open = document.createElement("button");
    open.textContent = "open session";
    open.addEventListener("click", () => {
      void dashboard.createSession({
        predefined: select.value,
        seed: parseInt(seed.value, 10) || 0,
        policy: policy.value.trim() || undefined,
      });
    });
    launcher.append(select, seed, policy, open);
  }

  const health = await api.health();
  const badge = document.getElementById("health");
  if (badge) badge.textContent = `service ${health.version} · ${health.sessions} session(s)`;
}

void boot();
