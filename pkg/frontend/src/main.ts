import { startApp } from "./app.js";

startApp(document).catch((error) => {
  const banner = document.getElementById("banner");
  if (banner) banner.textContent = `failed to start: ${String(error)}`;
});
