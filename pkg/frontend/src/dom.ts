/** Minimal DOM helpers; no framework, the app is four small panels. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else if (key === "text") node.textContent = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function labeled(text: string, control: HTMLElement): HTMLLabelElement {
  return el("label", { class: "field" }, [el("span", { text }), control]);
}

export function slider(
  min: number,
  max: number,
  value: number,
  step = 1,
): HTMLInputElement {
  const input = el("input", {
    type: "range",
    min: String(min),
    max: String(max),
    step: String(step),
    value: String(value),
  });
  return input;
}

export function numberInput(value: number | "", attrs: Record<string, string> = {}): HTMLInputElement {
  return el("input", { type: "number", value: String(value), ...attrs });
}

export function button(text: string, onClick: () => void, cls = "btn"): HTMLButtonElement {
  const b = el("button", { class: cls, text });
  b.addEventListener("click", (e) => {
    e.preventDefault();
    onClick();
  });
  return b;
}

export function errorBox(): HTMLElement {
  return el("div", { class: "error-box", role: "alert" });
}

export function showError(box: HTMLElement, message: string | null): void {
  box.textContent = message ?? "";
  box.classList.toggle("visible", message !== null && message !== "");
}

export async function fileToBlob(input: HTMLInputElement): Promise<Blob | null> {
  const file = input.files?.[0];
  return file ?? null;
}

export function imageCard(url: string, caption: string): HTMLElement {
  return el("figure", { class: "card" }, [
    el("img", { src: url, alt: caption }),
    el("figcaption", { text: caption }),
  ]);
}
