// Console wiring: connects the reconnecting client, builds the slider bank
// from the daemon's hello, and routes user input (sliders, presets, the
// close-hand sweep, config fields) into protocol commands at the control rate.

import { ReconnectingClient, type WsFactory } from "./connection.js";
import { PRESETS, closePose } from "./presets.js";
import { renderSnapshot } from "./render.js";
import { handleMessage, initialState, setPose, setSlider, Throttle, type ConsoleState } from "./state.js";

export interface ConsoleApp {
  state: ConsoleState;
  client: ReconnectingClient;
  sendPoseNow(): void;
  dispose(): void;
}

interface Elements {
  status: HTMLElement;
  error: HTMLElement;
  meta: HTMLElement;
  sliders: HTMLElement;
  gloveSvg: Element;
  robotSvg: Element;
  bars: HTMLElement;
  badges: HTMLElement;
  closeSlider: HTMLInputElement;
  scaleInput: HTMLInputElement;
  applyScale: HTMLElement;
  thresholdInputs: HTMLInputElement[];
  applyThresholds: HTMLElement;
}

function grabElements(doc: Document): Elements {
  const byId = (id: string) => {
    const el = doc.getElementById(id);
    if (el === null) throw new Error(`console page is missing #${id}`);
    return el;
  };
  return {
    status: byId("status"),
    error: byId("error-line"),
    meta: byId("meta"),
    sliders: byId("sliders"),
    gloveSvg: byId("glove-svg"),
    robotSvg: byId("robot-svg"),
    bars: byId("force-bars"),
    badges: byId("badges"),
    closeSlider: byId("close-slider") as HTMLInputElement,
    scaleInput: byId("scale-input") as HTMLInputElement,
    applyScale: byId("apply-scale"),
    thresholdInputs: [1, 2, 3].map((i) => byId(`threshold-${i}`) as HTMLInputElement),
    applyThresholds: byId("apply-thresholds"),
  };
}

function buildSliderBank(doc: Document, container: HTMLElement, dof: number, onInput: (i: number, v: number) => void): void {
  container.textContent = "";
  for (let i = 0; i < dof; i++) {
    const row = doc.createElement("label");
    row.className = "slider-row";
    const name = doc.createElement("span");
    name.textContent = `q${i}`;
    const input = doc.createElement("input");
    input.type = "range";
    input.min = "-1.5";
    input.max = "1.9";
    input.step = "0.01";
    input.value = "0";
    input.setAttribute("data-joint", String(i));
    input.addEventListener("input", () => onInput(i, Number(input.value)));
    row.appendChild(name);
    row.appendChild(input);
    container.appendChild(row);
  }
}

function setSliderDom(container: HTMLElement, pose: number[]): void {
  pose.forEach((v, i) => {
    const input = container.querySelector(`input[data-joint="${i}"]`) as HTMLInputElement | null;
    if (input !== null) input.value = String(v);
  });
}

export function startConsole(doc: Document, url: string, wsFactory?: WsFactory): ConsoleApp {
  const els = grabElements(doc);
  const state = initialState();
  const throttle = new Throttle(1000 / 30);

  const sendPoseNow = () => {
    if (state.hello !== null && state.sliders.length === state.hello.glove_dof) {
      client.send({ type: "set_glove_q", q: state.sliders });
      state.pendingSend = false;
    }
  };
  const sendPose = () => throttle.call(sendPoseNow);

  const client = new ReconnectingClient(
    url,
    {
      onStatus: (status) => {
        state.status = status;
        els.status.textContent = status;
        els.status.setAttribute("data-status", status);
      },
      onMessage: (data) => {
        const event = handleMessage(state, data);
        if (event.kind === "hello") {
          throttle.setPeriod(1000 / event.hello.control_rate);
          buildSliderBank(doc, els.sliders, event.hello.glove_dof, (i, v) => {
            setSlider(state, i, v);
            sendPose();
          });
          setSliderDom(els.sliders, state.sliders);
        } else if (event.kind === "snapshot") {
          renderSnapshot(
            { gloveSvg: els.gloveSvg, robotSvg: els.robotSvg, bars: els.bars, badges: els.badges, meta: els.meta },
            event.snapshot,
          );
        } else if (event.kind === "error") {
          els.error.textContent = event.reason;
        }
      },
    },
    { wsFactory },
  );

  const applyPose = (pose: number[]) => {
    setPose(state, pose);
    setSliderDom(els.sliders, pose);
    sendPose();
  };

  for (const button of Array.from(doc.querySelectorAll("[data-preset]"))) {
    button.addEventListener("click", () => {
      const pose = PRESETS[(button as HTMLElement).getAttribute("data-preset")!];
      if (pose !== undefined) applyPose(pose.slice());
    });
  }
  els.closeSlider.addEventListener("input", () => {
    applyPose(closePose(Number(els.closeSlider.value)));
  });
  els.applyScale.addEventListener("click", () => {
    const scale = Number(els.scaleInput.value);
    if (Number.isFinite(scale) && scale > 0) client.send({ type: "set_config", scale });
  });
  els.applyThresholds.addEventListener("click", () => {
    const thresholds = els.thresholdInputs.map((input) => Number(input.value));
    if (thresholds.every((t) => Number.isFinite(t) && t > 0)) {
      client.send({ type: "set_config", thresholds });
    }
  });

  client.connect();
  return {
    state,
    client,
    sendPoseNow,
    dispose: () => client.close(),
  };
}
