// User panel markup. Returns HTML strings; main.ts owns the container and
// wires the buttons by class name after injection.

import type { UserDetail } from "./api.js";
import { colorForHashtag } from "./color.js";
import {
  escapeHtml,
  formatCount,
  formatPercentile,
  formatScore,
} from "./format.js";

export interface UserPanelOptions {
  /** label queued for this user since the last retrain, if any */
  pendingLabel?: number;
}

export function emptyUserHtml(): string {
  return '<p class="hint">Click a point in the scatter to inspect a user.</p>';
}

export function userPanelHtml(
  user: UserDetail,
  opts: UserPanelOptions = {},
): string {
  const name = escapeHtml(user.screen_name || user.user_id);
  const location = user.location
    ? `<span class="muted">${escapeHtml(user.location)}</span>`
    : "";
  const description = user.description
    ? `<p class="user-desc">${escapeHtml(user.description)}</p>`
    : "";
  const avatar = user.profile_image_url
    ? `<img class="avatar" src="${escapeHtml(user.profile_image_url)}" alt="">`
    : '<div class="avatar avatar-blank"></div>';

  const tags = user.hashtags.slice(0, 8).map((h) =>
    `<span class="tag" style="border-color:${colorForHashtag(h.tag)}">` +
    `#${escapeHtml(h.tag)} <span class="muted">×${h.count}</span></span>`,
  ).join(" ");

  const pending = opts.pendingLabel === undefined
    ? ""
    : `<span class="pending-note">queued: ${formatScore(opts.pendingLabel)}</span>`;

  return `
    <div class="user-head">
      ${avatar}
      <div>
        <div class="user-name">@${name}</div>
        <div class="user-sub">${escapeHtml(user.user_id)} ${location}</div>
      </div>
    </div>
    ${description}
    <dl class="stats">
      <div><dt>botness</dt><dd class="big">${formatScore(user.botness)}</dd></div>
      <div><dt>influence</dt><dd class="big">${formatCount(user.influence)}</dd></div>
      <div><dt>percentile</dt><dd class="big">${formatPercentile(user.influence_percentile)}</dd></div>
      <div><dt>followers</dt><dd>${formatCount(user.followers_count)}</dd></div>
      <div><dt>statuses</dt><dd>${formatCount(user.statuses_count)}</dd></div>
      <div><dt>in dump</dt><dd>${formatCount(user.tweets_in_dump)}</dd></div>
    </dl>
    ${tags ? `<div class="tags">${tags}</div>` : ""}
    <div class="annotate">
      <div class="annotate-row">
        <label for="label-slider">label</label>
        <input id="label-slider" class="label-slider" type="range"
               min="0" max="1" step="0.05" value="${opts.pendingLabel ?? user.botness.toFixed(2)}">
        <output class="label-value">${formatScore(opts.pendingLabel ?? user.botness)}</output>
      </div>
      <div class="annotate-row">
        <button class="btn preset-human" data-label="0">human</button>
        <button class="btn preset-bot" data-label="1">bot</button>
        <button class="btn btn-primary save-label">save label</button>
        ${pending}
      </div>
    </div>
  `;
}
