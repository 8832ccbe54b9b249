/** Hash-routed single-page app for participants plus a researcher dashboard. */

import { ApiClient, ApiError } from "./api.js";
import { renderDashboard } from "./dashboard.js";
import { screenForRoute, visibleScreens } from "./gating.js";
import { QuestionnaireForm, renderQuestionnaire } from "./questionnaire.js";
import { ClientSession } from "./session.js";
import type { KeyValue } from "./storage.js";
import type { Chapter, ChapterOverview, LocalizedSchema, Sound } from "./types.js";

export class App {
  session: ClientSession | null = null;

  constructor(
    private doc: Document,
    private root: Element,
    private api: ApiClient,
    private store: KeyValue,
  ) {}

  async start(): Promise<void> {
    this.session = ClientSession.restore(this.api, this.store);
    if (this.session) {
      try {
        await this.session.loadConfig();
        await this.session.replay(); // drain anything queued before the restart
      } catch {
        /* offline start: cached session data is enough to render */
      }
    }
    this.doc.defaultView?.addEventListener("hashchange", () => void this.route());
    this.doc.defaultView?.addEventListener("online", () => void this.session?.replay());
    await this.route();
  }

  private hash(): string {
    return this.doc.defaultView?.location.hash || "#/home";
  }

  private navigate(route: string): void {
    if (this.doc.defaultView) this.doc.defaultView.location.hash = route;
  }

  async route(): Promise<void> {
    const hash = this.hash();
    if (hash.startsWith("#/dashboard")) return this.showDashboard();
    if (!this.session) return this.showLogin();

    const screen = screenForRoute(hash);
    if (screen && !this.session.modules.includes(screen.module)) {
      return this.showHome(); // gated: never render modules outside the arm
    }
    if (hash.startsWith("#/diary")) return this.showDiary();
    if (hash.startsWith("#/tinedu/")) return this.showChapter(hash.split("/")[2]);
    if (hash.startsWith("#/tinedu")) return this.showChapterList();
    if (hash.startsWith("#/sounds/")) return this.showPlayer(hash.split("/")[2]);
    if (hash.startsWith("#/sounds")) return this.showSoundList();
    if (hash.startsWith("#/feedback")) return this.showFeedback();
    if (hash.startsWith("#/about")) return this.showAbout();
    return this.showHome();
  }

  private page(title: string): Element {
    this.root.innerHTML = "";
    const header = this.doc.createElement("header");
    const heading = this.doc.createElement("h1");
    heading.textContent = title;
    header.appendChild(heading);
    if (this.session) {
      const home = this.doc.createElement("a");
      home.href = "#/home";
      home.textContent = "Home";
      home.className = "nav-home";
      header.appendChild(home);
    }
    this.root.appendChild(header);
    const main = this.doc.createElement("main");
    this.root.appendChild(main);
    return main;
  }

  private note(parent: Element, text: string, cls = "note"): void {
    const p = this.doc.createElement("p");
    p.className = cls;
    p.textContent = text;
    parent.appendChild(p);
  }

  // -- screens -------------------------------------------------------------

  showLogin(): void {
    const main = this.page("Study participation");
    const form = this.doc.createElement("form");
    form.className = "login-form";
    form.innerHTML = `
      <label>Center code <input name="center" required placeholder="C1"></label>
      <fieldset>
        <legend>Optional account</legend>
        <label>Login <input name="login"></label>
        <label>Password <input name="password" type="password"></label>
      </fieldset>
      <button type="submit" class="enter-registered">Register and enter</button>
      <button type="button" class="enter-anonymous">Enter anonymously</button>
      <p class="login-error" hidden></p>`;
    main.appendChild(form);

    const error = form.querySelector(".login-error") as HTMLElement;
    const enroll = async (anonymous: boolean) => {
      const data = new FormData(form as HTMLFormElement);
      const center = String(data.get("center") || "").trim();
      try {
        const enrollment = anonymous
          ? await this.api.registerAnonymous(center)
          : await this.api.register(center, String(data.get("login") || ""),
              String(data.get("password") || ""));
        this.session = ClientSession.fromEnrollment(this.api, this.store, enrollment);
        await this.session.loadConfig();
        this.navigate("#/home");
        await this.route();
      } catch (err) {
        error.hidden = false;
        error.textContent = err instanceof ApiError ? err.message : String(err);
      }
    };
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void enroll(false);
    });
    form.querySelector(".enter-anonymous")!
      .addEventListener("click", () => void enroll(true));
  }

  showHome(): void {
    const session = this.session!;
    const main = this.page("Your study modules");
    const windowStatus = session.config?.window;
    if (windowStatus?.expired) {
      this.note(main, "Your 12-week participation window has ended; "
        + "content stays readable but nothing new can be submitted.", "window-expired");
    } else if (windowStatus) {
      this.note(main, `${windowStatus.days_remaining} day(s) of participation remaining.`);
    }
    const grid = this.doc.createElement("nav");
    grid.className = "module-grid";
    for (const screen of visibleScreens(session.modules)) {
      const tile = this.doc.createElement("a");
      tile.href = screen.route;
      tile.className = `tile tile-${screen.module}`;
      tile.textContent = screen.title;
      grid.appendChild(tile);
    }
    main.appendChild(grid);
    const pending = session.queue.length;
    if (pending > 0) this.note(main, `${pending} entr(ies) queued for upload.`, "queue-note");
    const dead = session.queue.deadLetters();
    if (dead.length > 0) {
      this.note(main, `${dead.length} entr(ies) were rejected by the server and `
        + "need attention.", "dead-letter-note");
    }
  }

  async showDiary(): Promise<void> {
    const session = this.session!;
    const main = this.page("Tinnitus Diary");
    const diaryId = Object.entries(session.config?.schemas ?? {})
      .find(([, info]) => info.kind === "questionnaire" && info.module === "diary")?.[0];
    if (!diaryId) {
      this.note(main, "No diary questionnaire is configured yet.");
      return;
    }
    const schema = await session.schema(diaryId);
    const container = this.doc.createElement("div");
    main.appendChild(container);
    const form = new QuestionnaireForm(schema);
    renderQuestionnaire(this.doc, container, form, (answers) => {
      void session.submitAnswers(schema, answers).then((report) => {
        container.innerHTML = "";
        const delivered = report.stored + report.duplicates;
        this.note(container,
          delivered > 0 ? "Diary entry saved. Thank you!"
            : report.remaining > 0 ? "You appear to be offline; the entry is queued "
              + "and uploads automatically."
              : "The entry was rejected; please reopen the diary.",
          delivered > 0 ? "submit-ok" : "submit-pending");
      });
    });
  }

  async showChapterList(): Promise<void> {
    const session = this.session!;
    const main = this.page("TinEdu");
    const overview = await session.api.getChapters();
    const list = this.doc.createElement("ul");
    list.className = "chapter-list";
    for (const chapter of overview.chapters) {
      const state = overview.states[chapter.id] ?? "locked";
      const item = this.doc.createElement("li");
      item.className = `chapter chapter-${state}`;
      if (state === "locked") {
        item.textContent = `${this.title(chapter)} (locked)`;
      } else {
        const link = this.doc.createElement("a");
        link.href = `#/tinedu/${chapter.id}`;
        link.textContent = `${this.title(chapter)}${state === "completed" ? " ✓" : ""}`;
        item.appendChild(link);
      }
      list.appendChild(item);
    }
    main.appendChild(list);
  }

  private title(chapter: Chapter): string {
    const lang = this.session?.language ?? "en";
    return chapter.title?.[lang] ?? chapter.title?.en ?? chapter.id;
  }

  async showChapter(chapterId: string): Promise<void> {
    const session = this.session!;
    const overview: ChapterOverview = await session.api.getChapters();
    const chapter = overview.chapters.find((c) => c.id === chapterId);
    const main = this.page(chapter ? this.title(chapter) : "Chapter");
    if (!chapter) {
      this.note(main, "Unknown chapter.");
      return;
    }
    if ((overview.states[chapter.id] ?? "locked") === "locked") {
      this.note(main, "Finish the previous chapters to unlock this one.");
      return;
    }

    for (const [index, section] of chapter.sections.entries()) {
      const block = this.doc.createElement("section");
      block.className = "chapter-section";
      const bundle = (await session.api.getManifest())
        .find((b) => b.bundle_id === section.bundle_id);
      const htmlEntry = bundle?.entries.find((e) => e.path.endsWith(".html"));
      if (htmlEntry) {
        block.innerHTML = await session.api.fetchAssetText(htmlEntry.digest);
      }
      const done = this.doc.createElement("button");
      done.className = "section-done";
      done.textContent = "Mark section as read";
      done.addEventListener("click", () => {
        void session.logAction("tinedu", "education_step_completed",
          { chapter_id: chapter.id, section_index: index });
        done.disabled = true;
      });
      block.appendChild(done);
      main.appendChild(block);
    }

    const quizBox = this.doc.createElement("section");
    quizBox.className = "chapter-quiz";
    const quizHeading = this.doc.createElement("h2");
    quizHeading.textContent = "Quiz";
    quizBox.appendChild(quizHeading);
    const quiz = await session.schema(chapter.quiz_id);
    const holder = this.doc.createElement("div");
    quizBox.appendChild(holder);
    const form = new QuestionnaireForm(quiz);
    renderQuestionnaire(this.doc, holder, form, (answers) => {
      const score = gradeQuiz(quiz, answers as Record<string, string>);
      void session.logAction("tinedu", "quiz_completed",
        { chapter_id: chapter.id, quiz_id: quiz.schema_id, score }).then(() => {
          holder.innerHTML = "";
          this.note(holder, `Quiz finished: ${Math.round(score * 100)}% correct.`, "quiz-score");
        });
    });
    main.appendChild(quizBox);
  }

  async showSoundList(): Promise<void> {
    const session = this.session!;
    const main = this.page("ShadesOfNoise");
    const sounds = await session.api.getSounds();
    const list = this.doc.createElement("ul");
    list.className = "sound-list";
    for (const sound of sounds) {
      const item = this.doc.createElement("li");
      const link = this.doc.createElement("a");
      link.href = `#/sounds/${sound.sound_id}`;
      link.textContent = this.soundName(sound);
      item.appendChild(link);
      list.appendChild(item);
    }
    main.appendChild(list);
  }

  private soundName(sound: Sound): string {
    const lang = this.session?.language ?? "en";
    return sound.name[lang] ?? sound.name.en ?? sound.sound_id;
  }

  async showPlayer(soundId: string): Promise<void> {
    const session = this.session!;
    const sounds = await session.api.getSounds();
    const sound = sounds.find((s) => s.sound_id === soundId);
    const main = this.page(sound ? this.soundName(sound) : "Player");
    if (!sound) {
      this.note(main, "Unknown sound.");
      return;
    }
    const bundle = (await session.api.getManifest())
      .find((b) => b.bundle_id === sound.bundle_id);
    const wav = bundle?.entries.find((e) => /\.(wav|mp3|ogg|m4a|flac)$/i.test(e.path));
    const audio = this.doc.createElement("audio");
    audio.controls = true;
    if (wav) {
      const buffer = await session.api.fetchAsset(wav.digest);
      const url = URL.createObjectURL(new Blob([buffer], { type: "audio/wav" }));
      audio.src = url;
    }
    let startedAt: number | null = null;
    audio.addEventListener("play", () => { startedAt = Date.now(); });
    const logSession = () => {
      if (startedAt === null) return;
      const seconds = Math.max(0, Math.round((Date.now() - startedAt) / 1000));
      startedAt = null;
      void session.logAction("shades_of_noise", "sound_session",
        { sound_id: sound.sound_id, duration_seconds: seconds });
    };
    audio.addEventListener("pause", logSession);
    audio.addEventListener("ended", logSession);
    main.appendChild(audio);

    const rating = this.doc.createElement("div");
    rating.className = "rating";
    for (let stars = 1; stars <= 5; stars++) {
      const button = this.doc.createElement("button");
      button.className = "rate";
      button.textContent = "★".repeat(stars);
      button.addEventListener("click", () => {
        void session.logAction("shades_of_noise", "sound_rating",
          { sound_id: sound.sound_id, rating: stars });
        this.note(rating, "Thanks for rating!", "rating-ack");
      });
      rating.appendChild(button);
    }
    main.appendChild(rating);
  }

  async showFeedback(): Promise<void> {
    const session = this.session!;
    const main = this.page("Feedback");
    const messages = await session.api.getFeedback(session.language);
    if (messages.length === 0) {
      this.note(main, "No feedback yet. Keep using your modules!");
      return;
    }
    const list = this.doc.createElement("ul");
    list.className = "feedback-list";
    for (const message of messages) {
      const item = this.doc.createElement("li");
      item.className = "feedback-message";
      item.setAttribute("data-rule", message.rule_id);
      item.textContent = message.message;
      list.appendChild(item);
    }
    main.appendChild(list);
  }

  async showAbout(): Promise<void> {
    const main = this.page("About Us");
    const about = await this.api.getAbout();
    const body = this.doc.createElement("div");
    body.className = "about-body";
    body.innerHTML = about.html;
    main.appendChild(body);
    this.note(main, `Content version ${about.version.slice(0, 12)}`, "about-version");
  }

  async showDashboard(): Promise<void> {
    const main = this.page("Researcher dashboard");
    const tokenKey = "emistudy.researcher";
    const token = this.store.getItem(tokenKey);
    if (!token) {
      const form = this.doc.createElement("form");
      form.innerHTML = `<label>Researcher token
        <input name="token" type="password" required></label>
        <button type="submit">Open dashboard</button>`;
      form.addEventListener("submit", (event) => {
        event.preventDefault();
        const value = String(new FormData(form as HTMLFormElement).get("token") || "");
        this.store.setItem(tokenKey, value);
        void this.showDashboard();
      });
      main.appendChild(form);
      return;
    }
    const api = new ApiClient(this.api.baseUrl, undefined, token);
    try {
      const summary = await api.adherence();
      const topUsers = Object.entries(summary.per_user)
        .sort((a, b) => b[1] - a[1]).slice(0, 20).map(([userId]) => userId);
      const seriesByUser: Record<string, { day: string; count: number }[]> = {};
      for (const userId of topUsers) {
        seriesByUser[userId] = (await api.dailySeries(userId)).series;
      }
      const container = this.doc.createElement("div");
      main.appendChild(container);
      renderDashboard(this.doc, container, summary, seriesByUser);
    } catch (err) {
      if (err instanceof ApiError && (err.status === 401 || err.status === 403)) {
        this.store.removeItem(tokenKey);
        this.note(main, "Token rejected, please log in again.", "login-error");
        await this.showDashboard();
        return;
      }
      throw err;
    }
  }
}

export function gradeQuiz(quiz: LocalizedSchema,
                          answers: Record<string, string>): number {
  const ids = Object.keys(quiz.questions);
  if (ids.length === 0) return 0;
  const correct = ids.filter((qid) =>
    answers[qid] !== undefined && answers[qid] === quiz.questions[qid].correct_option);
  return correct.length / ids.length;
}
