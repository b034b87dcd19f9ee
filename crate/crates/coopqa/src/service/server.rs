//! Websocket transport for rooms.
//!
//! `POST /rooms` opens a room and returns `{"room": id}`. Clients connect
//! to `GET /rooms/{id}/ws`, send a `join` message first, and then receive
//! [`RoomMessage`](super::protocol::RoomMessage) JSON frames. Each room runs
//! in its own task that owns the [`Room`] state; connections only send it
//! commands, so every mutation goes through the room's single queue.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coopqa_core::engine::CachedGuesser;
use coopqa_core::guesser::Guesser;
use coopqa_core::sampler::ExposureHistory;
use coopqa_core::Question;
use futures_util::{SinkExt, StreamExt};
use tokio::sync::{mpsc, oneshot};
use tokio::time::Instant;

use super::protocol::{ClientJoin, ClientMessage, Envelope};
use super::room::{Room, RoomConfig};
use crate::eventlog::write_event_log;
use crate::logstore::{load_history, save_history, RecordStore};

/// Everything rooms share.
pub struct ServerState {
    questions: Arc<[Question]>,
    labels: Arc<[String]>,
    guesser: Arc<Guesser>,
    history: Arc<Mutex<ExposureHistory>>,
    store: Arc<Mutex<RecordStore>>,
    template: RoomConfig,
    data_dir: PathBuf,
    next_room: AtomicU64,
    rooms: Mutex<BTreeMap<String, mpsc::Sender<Command>>>,
}

impl ServerState {
    /// Loads (or starts) the exposure history and record store under
    /// `data_dir`. `template.seed` seeds the first room; each later room
    /// adds one.
    pub fn new(
        questions: Vec<Question>,
        guesser: Guesser,
        template: RoomConfig,
        data_dir: PathBuf,
    ) -> anyhow::Result<Self> {
        std::fs::create_dir_all(data_dir.join("rooms")).with_context(|| format!("creating {}", data_dir.display()))?;
        let history = load_history(&data_dir.join("history.json"))?
            .unwrap_or_else(|| ExposureHistory::for_questions(questions.len()));
        let store = RecordStore::open(data_dir.join("records.jsonl"))?;
        let mut labels: Vec<String> = guesser
            .index
            .documents()
            .iter()
            .map(|d| d.label().to_string())
            .chain(questions.iter().map(|q| q.answer().to_string()))
            .collect();
        labels.sort();
        labels.dedup();
        Ok(Self {
            questions: questions.into(),
            labels: labels.into(),
            guesser: Arc::new(guesser),
            history: Arc::new(Mutex::new(history)),
            store: Arc::new(Mutex::new(store)),
            template,
            data_dir,
            next_room: AtomicU64::new(0),
            rooms: Mutex::new(BTreeMap::new()),
        })
    }

    /// Opens a room and starts its task.
    pub fn open_room(self: &Arc<Self>) -> anyhow::Result<String> {
        let n = self.next_room.fetch_add(1, Ordering::SeqCst);
        let id = format!("room-{n:04}");
        let mut config = self.template.clone();
        config.seed = config.seed.wrapping_add(n);
        let room = Room::new(
            id.clone(),
            config,
            Arc::clone(&self.questions),
            Arc::clone(&self.labels),
            CachedGuesser::new(Arc::clone(&self.guesser)),
            Arc::clone(&self.history),
        )?;
        let messages = self.data_dir.join("rooms").join(format!("{id}.messages.jsonl"));
        let events = self.data_dir.join("rooms").join(&id);
        std::fs::create_dir_all(&events)?;
        let sink = BufWriter::new(File::create(&messages)?);
        let (tx, rx) = mpsc::channel(256);
        self.rooms.lock().expect("rooms lock").insert(id.clone(), tx);
        let task = RoomTask {
            room,
            rx,
            conns: BTreeMap::new(),
            messages: sink,
            events,
            store: Arc::clone(&self.store),
            history: Arc::clone(&self.history),
            history_path: self.data_dir.join("history.json"),
            games: 0,
            opened: Instant::now(),
        };
        let state = Arc::clone(self);
        let room_id = id.clone();
        tokio::spawn(async move {
            if let Err(e) = task.run().await {
                eprintln!("{room_id}: {e:#}");
            }
            state.rooms.lock().expect("rooms lock").remove(&room_id);
        });
        Ok(id)
    }

    fn room(&self, id: &str) -> Option<mpsc::Sender<Command>> {
        self.rooms.lock().expect("rooms lock").get(id).cloned()
    }
}

type Outbox = mpsc::UnboundedSender<String>;

enum Command {
    Join {
        player: String,
        outbox: Outbox,
        reply: oneshot::Sender<bool>,
    },
    Client {
        player: String,
        msg: ClientMessage,
    },
    Malformed {
        player: String,
        message: String,
    },
    Disconnect {
        player: String,
    },
}

struct RoomTask {
    room: Room<CachedGuesser<Arc<Guesser>>>,
    rx: mpsc::Receiver<Command>,
    conns: BTreeMap<String, Outbox>,
    messages: BufWriter<File>,
    events: PathBuf,
    store: Arc<Mutex<RecordStore>>,
    history: Arc<Mutex<ExposureHistory>>,
    history_path: PathBuf,
    games: usize,
    opened: Instant,
}

impl RoomTask {
    fn now(&self) -> u64 {
        self.opened.elapsed().as_millis() as u64
    }

    async fn run(mut self) -> anyhow::Result<()> {
        loop {
            let wake = self
                .room
                .next_deadline()
                .map(|ms| self.opened + Duration::from_millis(ms));
            let cmd = tokio::select! {
                cmd = self.rx.recv() => match cmd {
                    Some(cmd) => Some(cmd),
                    None => return Ok(()),
                },
                _ = tokio::time::sleep_until(wake.unwrap_or_else(Instant::now)), if wake.is_some() => None,
            };
            let now = self.now();
            // a rejected join is answered on the new connection only
            let mut direct = None;
            let out = match cmd {
                None => self.room.tick(now),
                Some(Command::Join { player, outbox, reply }) => {
                    let join = ClientMessage::Join(ClientJoin { player: player.clone() });
                    let out = self.room.handle(&player, join, now);
                    let admitted = self.room.is_seated(&player) && !self.conns.contains_key(&player);
                    if admitted {
                        self.conns.insert(player.clone(), outbox);
                    } else {
                        direct = Some((player, outbox));
                    }
                    let _ = reply.send(admitted);
                    out
                }
                Some(Command::Client { player, msg }) => self.room.handle(&player, msg, now),
                Some(Command::Malformed { player, message }) => self.room.reject(&player, "bad_message", &message, now),
                Some(Command::Disconnect { player }) => {
                    self.conns.remove(&player);
                    self.room.disconnect(&player, now)
                }
            };
            self.deliver(&out, direct.as_ref())?;
            self.persist()?;
            if self.room.is_done() && self.conns.is_empty() {
                return Ok(());
            }
        }
    }

    fn deliver(&mut self, out: &[Envelope], direct: Option<&(String, Outbox)>) -> anyhow::Result<()> {
        for env in out {
            serde_json::to_writer(&mut self.messages, env)?;
            self.messages.write_all(b"\n")?;
            let text = serde_json::to_string(&env.message)?;
            if let Some((_, outbox)) = direct.filter(|(p, _)| env.to.as_deref() == Some(p)) {
                let _ = outbox.send(text);
                continue;
            }
            for (player, outbox) in &self.conns {
                if env.reaches(player) {
                    let _ = outbox.send(text.clone());
                }
            }
        }
        self.messages.flush()?;
        Ok(())
    }

    fn persist(&mut self) -> anyhow::Result<()> {
        let records = self.room.take_records();
        if !records.is_empty() {
            self.store.lock().expect("store lock").append_all(&records)?;
        }
        let games = self.room.take_games();
        for g in &games {
            self.games += 1;
            let name = format!("{:04}-{}.events.jsonl", self.games, g.setup.question_id);
            write_event_log(&self.events.join(name), &g.setup, &g.events)?;
        }
        if !games.is_empty() {
            let history = self.history.lock().expect("history lock").clone();
            save_history(&self.history_path, &history)?;
        }
        Ok(())
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/rooms", post(create_room))
        .route("/rooms/{id}/ws", get(connect))
        .with_state(state)
}

async fn create_room(State(state): State<Arc<ServerState>>) -> Response {
    match state.open_room() {
        Ok(id) => Json(serde_json::json!({ "room": id })).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

async fn connect(State(state): State<Arc<ServerState>>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Response {
    match state.room(&id) {
        Some(room) => ws.on_upgrade(move |socket| session(socket, room)),
        None => (StatusCode::NOT_FOUND, format!("no room {id:?}")).into_response(),
    }
}

/// One client connection. The first frame must be a `join`.
async fn session(socket: WebSocket, room: mpsc::Sender<Command>) {
    let (mut sink, mut stream) = socket.split();
    let (outbox, mut inbox) = mpsc::unbounded_channel::<String>();
    let writer = tokio::spawn(async move {
        while let Some(text) = inbox.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let player = loop {
        let Some(Ok(frame)) = stream.next().await else {
            drop(outbox);
            let _ = writer.await;
            return;
        };
        let Message::Text(text) = frame else { continue };
        match serde_json::from_str::<ClientMessage>(&text) {
            Ok(ClientMessage::Join(ClientJoin { player })) => {
                let (reply, admitted) = oneshot::channel();
                let cmd = Command::Join {
                    player: player.clone(),
                    outbox: outbox.clone(),
                    reply,
                };
                if room.send(cmd).await.is_err() || !admitted.await.unwrap_or(false) {
                    drop(outbox);
                    let _ = writer.await;
                    return;
                }
                break player;
            }
            _ => {
                let error = serde_json::json!({
                    "v": super::protocol::PROTOCOL_VERSION,
                    "type": "error",
                    "payload": {"code": "not_joined", "message": "send a join message first"},
                });
                let _ = outbox.send(error.to_string());
            }
        }
    };
    drop(outbox);

    while let Some(Ok(frame)) = stream.next().await {
        let cmd = match frame {
            Message::Text(text) => match serde_json::from_str::<ClientMessage>(&text) {
                Ok(msg) => Command::Client {
                    player: player.clone(),
                    msg,
                },
                Err(e) => Command::Malformed {
                    player: player.clone(),
                    message: e.to_string(),
                },
            },
            Message::Close(_) => break,
            _ => continue,
        };
        if room.send(cmd).await.is_err() {
            break;
        }
    }
    let _ = room
        .send(Command::Disconnect {
            player: player.clone(),
        })
        .await;
    let _ = writer.await;
}

/// Binds `addr` and serves until the process exits.
pub async fn serve(state: Arc<ServerState>, addr: std::net::SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

/// Serves on an already bound listener; used by tests with port 0.
pub async fn serve_on(state: Arc<ServerState>, listener: tokio::net::TcpListener) -> anyhow::Result<()> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}
