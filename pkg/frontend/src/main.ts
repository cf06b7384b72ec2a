// Browser entry point: wires the controller to the DOM with one delegated
// listener per event type and repaints after every state change.

import { ApiClient } from "./api";
import { AnswerCache, SessionController, SessionStore } from "./state";
import { render } from "./views";

function start(root: HTMLElement, storage: Storage): SessionController {
  const controller = new SessionController(
    new ApiClient(""),
    new AnswerCache(storage),
    new SessionStore(storage),
  );

  const paint = (): void => {
    root.innerHTML = render(controller.viewModel());
  };

  root.addEventListener("submit", (event) => {
    const form = event.target;
    if (!(form instanceof HTMLFormElement)) return;
    event.preventDefault();
    const action = form.dataset.action;
    if (action === "login") {
      const input = form.elements.namedItem("annotator_id");
      if (input instanceof HTMLInputElement && input.value.trim() !== "") {
        void controller.login(input.value).then(paint);
        paint();
      }
    } else if (action === "submit-page") {
      void controller.submitPage().then(paint);
      paint();
    }
  });

  root.addEventListener("change", (event) => {
    const input = event.target;
    if (!(input instanceof HTMLInputElement) || input.type !== "radio") return;
    controller.select(input.name, input.value);
    paint();
  });

  void controller.resume().then(paint, (err) => {
    // a dead server at boot still needs a usable login screen
    console.error(err);
    paint();
  });
  paint();
  return controller;
}

const root = document.getElementById("app");
if (root !== null) {
  start(root, window.localStorage);
}

export { start };
