//! TCP co-simulation master. One reader thread per connection feeds a
//! single queue; all state changes happen on the calling thread.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::barrier::{barrier_wait, ClientEvent, ConnId};
use super::kernel::{Kernel, KernelCounters};
use super::protocol::{encode_message, FrameMessage, MessageKind, MessageReader};

#[derive(Debug, Clone, PartialEq)]
pub struct ServeOptions {
    /// Barrier timeout per frame.
    pub timeout: Duration,
    /// Simulated seconds per wall-clock second; `None` runs unpaced.
    pub realtime_factor: Option<f64>,
    pub max_frames: Option<u64>,
    /// Wait this long for `min_clients` handshakes before the first frame.
    pub min_clients: usize,
    pub accept_wait: Duration,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            timeout: Duration::from_millis(200),
            realtime_factor: None,
            max_frames: None,
            min_clients: 0,
            accept_wait: Duration::from_secs(5),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServeReport {
    pub frames: u64,
    pub clients: u64,
    pub lagging_events: u64,
    pub disconnects: u64,
    pub malformed: u64,
    pub rejected_handshakes: u64,
    pub counters: KernelCounters,
}

struct Conn {
    writer: TcpStream,
    client_id: Option<String>,
    lockstep: bool,
}

fn spawn_reader(conn: ConnId, stream: TcpStream, tx: Sender<ClientEvent>) {
    thread::spawn(move || {
        let mut reader = MessageReader::new(BufReader::new(stream));
        loop {
            match reader.next_message() {
                Ok(Some(Ok(msg))) => {
                    if tx.send(ClientEvent::Message { conn, msg }).is_err() {
                        return;
                    }
                }
                Ok(Some(Err(error))) => {
                    let _ = tx.send(ClientEvent::Malformed { conn, error });
                    return;
                }
                Ok(None) | Err(_) => {
                    let _ = tx.send(ClientEvent::Closed { conn });
                    return;
                }
            }
        }
    });
}

fn spawn_acceptor(
    listener: TcpListener,
    tx: Sender<(ConnId, TcpStream)>,
    done: Arc<AtomicBool>,
) -> std::io::Result<()> {
    listener.set_nonblocking(true)?;
    thread::spawn(move || {
        let mut next: ConnId = 1;
        while !done.load(Ordering::Relaxed) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let _ = stream.set_nonblocking(false);
                    let _ = stream.set_nodelay(true);
                    if tx.send((next, stream)).is_err() {
                        return;
                    }
                    next += 1;
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    thread::sleep(Duration::from_millis(2))
                }
                Err(_) => thread::sleep(Duration::from_millis(2)),
            }
        }
    });
    Ok(())
}

struct Master<'a> {
    kernel: &'a mut Kernel,
    conns: BTreeMap<ConnId, Conn>,
    report: ServeReport,
    events_tx: Sender<ClientEvent>,
}

impl Master<'_> {
    fn send(&mut self, conn: ConnId, msg: &FrameMessage) {
        let ok = self
            .conns
            .get_mut(&conn)
            .is_some_and(|c| c.writer.write_all(&encode_message(msg)).is_ok());
        if !ok {
            self.drop_conn(conn);
        }
    }

    fn drop_conn(&mut self, conn: ConnId) {
        if let Some(c) = self.conns.remove(&conn) {
            if let Some(id) = &c.client_id {
                self.kernel.disconnect(id);
            }
            let _ = c.writer.shutdown(std::net::Shutdown::Write);
            self.report.disconnects += 1;
        }
    }

    fn accept(&mut self, conn: ConnId, stream: TcpStream) {
        let Ok(reader) = stream.try_clone() else {
            return;
        };
        spawn_reader(conn, reader, self.events_tx.clone());
        self.conns.insert(
            conn,
            Conn {
                writer: stream,
                client_id: None,
                lockstep: false,
            },
        );
    }

    /// Handles a non-barrier event; returns an UPDATE to merge, if any.
    fn handle(&mut self, ev: ClientEvent) -> Option<FrameMessage> {
        match ev {
            ClientEvent::Message { conn, msg } => {
                let registered = self.conns.get(&conn).and_then(|c| c.client_id.clone());
                match (msg.kind, registered) {
                    (MessageKind::Hello, None) => {
                        match self.kernel.handshake(&msg) {
                            Ok(welcome) => {
                                if let Some(c) = self.conns.get_mut(&conn) {
                                    c.client_id = welcome.client_id.clone();
                                    c.lockstep = msg
                                        .control
                                        .as_ref()
                                        .and_then(|c| c.lockstep)
                                        .unwrap_or(true);
                                }
                                self.report.clients += 1;
                                self.send(conn, &welcome);
                            }
                            Err(e) => {
                                self.report.rejected_handshakes += 1;
                                let bye = FrameMessage::bye(
                                    self.kernel.frame_no(),
                                    self.kernel.world().time(),
                                    &e.to_string(),
                                );
                                self.send(conn, &bye);
                                self.drop_conn(conn);
                            }
                        }
                        None
                    }
                    (MessageKind::Bye, _) => {
                        self.drop_conn(conn);
                        None
                    }
                    (MessageKind::Update, Some(id)) => {
                        let mut msg = msg;
                        msg.client_id = Some(id);
                        Some(msg)
                    }
                    (_, None) => {
                        self.drop_conn(conn);
                        None
                    }
                    _ => None,
                }
            }
            ClientEvent::Malformed { conn, .. } => {
                self.report.malformed += 1;
                self.drop_conn(conn);
                None
            }
            ClientEvent::Closed { conn } => {
                self.drop_conn(conn);
                None
            }
        }
    }
}

/// Runs the frame loop until the scenario ends, `max_frames` is reached or
/// `stop` is raised. `on_frame` sees every broadcast frame, starting with
/// the initial one.
pub fn serve(
    listener: TcpListener,
    kernel: &mut Kernel,
    opts: &ServeOptions,
    stop: &AtomicBool,
    mut on_frame: impl FnMut(&FrameMessage),
) -> std::io::Result<ServeReport> {
    let (conn_tx, conn_rx) = channel::<(ConnId, TcpStream)>();
    let (events_tx, events_rx) = channel::<ClientEvent>();
    let done = Arc::new(AtomicBool::new(false));
    spawn_acceptor(listener, conn_tx, done.clone())?;
    let mut m = Master {
        kernel,
        conns: BTreeMap::new(),
        report: ServeReport::default(),
        events_tx,
    };
    let mut pending_updates = Vec::new();

    let wait_until = Instant::now() + opts.accept_wait;
    while (m.report.clients as usize) < opts.min_clients
        && Instant::now() < wait_until
        && !stop.load(Ordering::Relaxed)
    {
        while let Ok((conn, stream)) = conn_rx.try_recv() {
            m.accept(conn, stream);
        }
        if let Ok(ev) = events_rx.recv_timeout(Duration::from_millis(5)) {
            if let Some(u) = m.handle(ev) {
                pending_updates.push(u);
            }
        }
    }

    let start = Instant::now();
    let t0 = m.kernel.world().time();
    let mut frame = m.kernel.frame_message();
    on_frame(&frame);
    loop {
        if stop.load(Ordering::Relaxed) || m.kernel.world().finished() {
            break;
        }
        if opts.max_frames.is_some_and(|n| m.report.frames >= n) {
            break;
        }
        while let Ok((conn, stream)) = conn_rx.try_recv() {
            m.accept(conn, stream);
        }
        while let Ok(ev) = events_rx.try_recv() {
            if let Some(u) = m.handle(ev) {
                pending_updates.push(u);
            }
        }
        let targets: Vec<ConnId> = m
            .conns
            .iter()
            .filter(|(_, c)| c.client_id.is_some())
            .map(|(&k, _)| k)
            .collect();
        for conn in targets {
            m.send(conn, &frame);
        }
        let expected: BTreeSet<ConnId> = m
            .conns
            .iter()
            .filter(|(_, c)| c.client_id.is_some() && c.lockstep)
            .map(|(&k, _)| k)
            .collect();
        let outcome = barrier_wait(&events_rx, &expected, frame.frame_no, opts.timeout);
        m.report.lagging_events += outcome.lagging.len() as u64;
        for ev in outcome.events {
            if let Some(u) = m.handle(ev) {
                pending_updates.push(u);
            }
        }
        frame = m.kernel.tick(&pending_updates);
        pending_updates.clear();
        m.report.frames += 1;
        on_frame(&frame);
        if let Some(factor) = opts.realtime_factor.filter(|f| *f > 0.0) {
            let due = start + Duration::from_secs_f64((frame.sim_time - t0) / factor);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
    }

    let bye = FrameMessage::bye(
        m.kernel.frame_no(),
        m.kernel.world().time(),
        "end of simulation",
    );
    let conns: Vec<ConnId> = m.conns.keys().copied().collect();
    for conn in conns {
        m.send(conn, &bye);
        m.drop_conn(conn);
    }
    done.store(true, Ordering::Relaxed);
    m.report.counters = m.kernel.counters();
    Ok(m.report)
}
