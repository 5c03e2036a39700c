/** Browser bootstrap: mount the console on #app and keep the URL shareable. */

import { ConsoleApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new ConsoleApp(root, {
  apiBase: "",
  tileTemplate: "https://tile.openstreetmap.org/{z}/{x}/{y}.png",
  width: root.clientWidth || 1024,
  height: root.clientHeight || 640,
  onUrlChange: (search) => {
    history.replaceState(null, "", search ? `?${search}` : location.pathname);
  },
});

void app.boot(location.search);
