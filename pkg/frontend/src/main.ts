// Browser wiring: renders ViewState into the DOM and forwards events to the
// controller. All state lives in the controller; this layer only draws.

import { ApiClient } from "./api.js";
import { AppController, ViewState } from "./controller.js";
import { Player, highlightIndex, schedule, soundingAt } from "./playback.js";
import { buildMeasureGrid, buildPiano, splitTermLinks } from "./renderModel.js";
import { Level } from "./types.js";

const api = new ApiClient();
const controller = new AppController(api);
const player = new Player({
  onBeat: (beat) => controller.setPlaybackBeat(beat),
  onStop: () => controller.setPlaybackBeat(null),
});

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function renderNotices(state: ViewState): void {
  const host = byId<HTMLDivElement>("notices");
  host.replaceChildren();
  for (const message of state.notices) {
    const note = el("div", "notice", message);
    note.addEventListener("click", () => controller.dismissNotices());
    host.appendChild(note);
  }
}

function renderTransport(state: ViewState): void {
  byId<HTMLButtonElement>("btn-process").disabled = !controller.can("process");
  byId<HTMLButtonElement>("btn-continue").disabled = !controller.can("continue");
  byId<HTMLButtonElement>("btn-end").disabled = !controller.can("end");
  byId<HTMLButtonElement>("btn-play").disabled = state.score === null;
  byId<HTMLButtonElement>("btn-upload").disabled = !controller.can("upload");
  const exportLink = byId<HTMLAnchorElement>("link-export");
  const url = controller.exportUrl();
  if (url && state.score) {
    exportLink.href = url;
    exportLink.classList.remove("hidden");
  } else {
    exportLink.classList.add("hidden");
  }
  const status = byId<HTMLSpanElement>("session-state");
  const key = state.session?.analysis?.key;
  status.textContent = state.session
    ? `${state.session.state}${key ? ` - ${key}` : ""}`
    : "no session";
}

function renderScore(state: ViewState): void {
  const host = byId<HTMLDivElement>("score");
  host.replaceChildren();
  if (!state.score) {
    host.appendChild(el("p", "placeholder",
      "Upload a .wav or .mid melody, then press Process to see it here."));
    return;
  }
  const playingMeasure = state.playbackBeat !== null ? highlightIndex(state.playbackBeat) : null;
  for (const cell of buildMeasureGrid(state.score)) {
    const box = el("div", `measure source-${cell.source}`);
    if (cell.phraseStart) box.classList.add("phrase-start");
    if (cell.index === state.selectedMeasure) box.classList.add("selected");
    if (cell.index === playingMeasure) box.classList.add("playing");
    box.dataset.measure = String(cell.index);

    const head = el("div", "measure-head");
    head.appendChild(el("span", "measure-number", String(cell.index + 1)));
    if (cell.degree) head.appendChild(el("span", "degree", cell.degree));
    if (cell.chord) head.appendChild(el("span", "chord", cell.chord));
    if (cell.ornamentCount > 0) {
      head.appendChild(el("span", "ornament-badge", `✵${cell.ornamentCount}`));
    }
    box.appendChild(head);

    for (const [lane, notes] of [["rh", cell.right], ["lh", cell.left]] as const) {
      const roll = el("div", `roll ${lane}`);
      for (const note of notes) {
        const bar = el("div", note.ornament ? "note ornamented" : "note");
        bar.style.left = `${note.leftPercent}%`;
        bar.style.width = `${Math.max(note.widthPercent - 1, 1.5)}%`;
        bar.style.top = `${note.topPercent}%`;
        bar.title = note.name + (note.ornament ? ` (${note.ornament})` : "");
        roll.appendChild(bar);
      }
      box.appendChild(roll);
    }

    box.addEventListener("click", () => void controller.selectMeasure(cell.index));
    host.appendChild(box);
  }
}

function renderPiano(state: ViewState): void {
  const host = byId<HTMLDivElement>("piano");
  host.replaceChildren();
  const lit = state.score && state.playbackBeat !== null
    ? soundingAt(schedule(state.score), state.playbackBeat)
    : [];
  for (const key of buildPiano(lit)) {
    const node = el("div", key.black ? "key black" : "key white");
    if (key.lit) node.classList.add("lit");
    host.appendChild(node);
  }
}

function renderExplanation(state: ViewState): void {
  const host = byId<HTMLDivElement>("explanation");
  host.replaceChildren();
  if (!state.explanation) {
    host.appendChild(el("p", "placeholder", "Click a measure to see why it sounds the way it does."));
    return;
  }
  const scope = state.explanation.scope;
  const title = scope.kind === "piece" ? "The piece"
    : `${scope.kind === "measure" ? "Measure" : "Phrase"} ${Number(scope.index) + 1}`;
  host.appendChild(el("h3", undefined, `${title} (${state.explanation.level})`));
  for (const section of state.explanation.sections) {
    host.appendChild(el("h4", undefined, section.aspect));
    const para = el("p");
    for (const run of splitTermLinks(section.text)) {
      if (run.kind === "text") {
        para.appendChild(document.createTextNode(run.value));
      } else {
        const link = el("a", "term", run.value);
        link.href = "#mentor";
        link.addEventListener("click", (event) => {
          event.preventDefault();
          controller.clickTerm(run.value);
          byId<HTMLInputElement>("mentor-input").focus();
        });
        para.appendChild(link);
      }
    }
    host.appendChild(para);
  }
  renderEditMenus(state, host);
}

function renderEditMenus(state: ViewState, host: HTMLElement): void {
  if (!state.alternatives || state.selectedMeasure === null) return;
  const menus = el("div", "edit-menus");
  menus.appendChild(el("h4", undefined, "edit this measure"));

  const degreeSelect = el("select");
  degreeSelect.appendChild(new Option("Common Progression Degrees", "", true, true));
  for (const degree of state.alternatives.degrees) {
    degreeSelect.appendChild(new Option(degree, degree));
  }
  degreeSelect.addEventListener("change", () => {
    if (degreeSelect.value) void controller.editMeasure("degree", degreeSelect.value);
  });
  menus.appendChild(degreeSelect);

  const rhythmSelect = el("select");
  rhythmSelect.appendChild(new Option("Common Rhythms", "", true, true));
  for (const id of state.alternatives.rhythms) {
    rhythmSelect.appendChild(new Option(`pattern ${id}`, String(id)));
  }
  rhythmSelect.addEventListener("change", () => {
    if (rhythmSelect.value) void controller.editMeasure("rhythm", Number(rhythmSelect.value));
  });
  menus.appendChild(rhythmSelect);
  host.appendChild(menus);
}

function renderMentor(state: ViewState): void {
  const input = byId<HTMLInputElement>("mentor-input");
  if (input.value !== state.mentorInput) input.value = state.mentorInput;
  const log = byId<HTMLDivElement>("mentor-log");
  log.replaceChildren();
  for (const entry of state.mentorTranscript) {
    log.appendChild(el("p", "mentor-query", `you: ${entry.query}`));
    log.appendChild(el("p", "mentor-reply", `mentor (${entry.source}): ${entry.response}`));
  }
  log.scrollTop = log.scrollHeight;
}

function render(state: ViewState): void {
  renderNotices(state);
  renderTransport(state);
  renderScore(state);
  renderPiano(state);
  renderExplanation(state);
  renderMentor(state);
}

function wire(): void {
  controller.subscribe(render);

  byId<HTMLButtonElement>("btn-upload").addEventListener("click", () => {
    const picker = byId<HTMLInputElement>("file-input");
    const file = picker.files?.[0];
    if (file) void controller.uploadFile(file, file.name);
  });
  byId<HTMLButtonElement>("btn-process").addEventListener("click", () => void controller.process());
  byId<HTMLButtonElement>("btn-continue").addEventListener("click", () => void controller.continuePhrase());
  byId<HTMLButtonElement>("btn-end").addEventListener("click", () => void controller.endPiece());

  const bpm = byId<HTMLInputElement>("bpm-slider");
  const bpmLabel = byId<HTMLSpanElement>("bpm-value");
  bpm.addEventListener("input", () => {
    bpmLabel.textContent = bpm.value;
    controller.setBpm(Number(bpm.value));
    if (player.isPlaying && controller.state.score) {
      player.play(controller.state.score, Number(bpm.value));  // re-time live
    }
  });

  byId<HTMLSelectElement>("level-select").addEventListener("change", (event) => {
    void controller.setLevel((event.target as HTMLSelectElement).value as Level);
  });

  byId<HTMLButtonElement>("btn-play").addEventListener("click", () => {
    if (player.isPlaying) {
      player.stop();
    } else if (controller.state.score) {
      player.play(controller.state.score, controller.state.bpm);
    }
  });

  byId<HTMLFormElement>("mentor-form").addEventListener("submit", (event) => {
    event.preventDefault();
    controller.setMentorInput(byId<HTMLInputElement>("mentor-input").value);
    void controller.askMentor();
  });
  byId<HTMLInputElement>("mentor-input").addEventListener("input", (event) => {
    controller.state.mentorInput = (event.target as HTMLInputElement).value;
  });

  void controller.start();
  render(controller.state);
}

document.addEventListener("DOMContentLoaded", wire);
